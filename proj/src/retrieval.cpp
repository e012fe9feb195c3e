#include "fse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fse/errors.hpp"

namespace fse {

std::string partial_id(const std::string& object_id, const std::vector<std::string>& comp_ids) {
    std::string id = object_id + ":";
    for (std::size_t i = 0; i < comp_ids.size(); ++i) id += (i ? "+" : "") + comp_ids[i];
    return id;
}

const IndexEntry* RetrievalIndex::find(const std::string& id) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), id,
                               [](const IndexEntry& e, const std::string& s) { return e.id < s; });
    return (it != entries.end() && it->id == id) ? &*it : nullptr;
}

namespace {

RetrievalIndex finish_index(std::vector<IndexEntry> entries, const EncoderParams& params,
                            const Dataset& dataset, const std::vector<std::vector<Component>>& parts,
                            int threads) {
    std::vector<Mat> clouds;
    clouds.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        // cloud seed tied to the partial id for reproducibility
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : entries[i].id) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
        clouds.push_back(sample_point_cloud(parts[i], params.config.points,
                                            derive_seed(dataset.seed, h)));
    }
    auto embeddings = embed_batch(params, clouds, threads);
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].embedding = embeddings[i];

    std::sort(entries.begin(), entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });
    RetrievalIndex index;
    index.entries = std::move(entries);
    return index;
}

}  // namespace

RetrievalIndex build_index(const Dataset& dataset, const EncoderParams& params,
                           std::size_t max_partials_per_object, int threads) {
    std::vector<IndexEntry> entries;
    std::vector<std::vector<Component>> parts;
    for (const ObjectRecord* obj : dataset.test_objects()) {
        for (const auto& subset : enumerate_partials(obj->graph, max_partials_per_object)) {
            IndexEntry e;
            e.id = partial_id(obj->id, subset);
            e.object_id = obj->id;
            e.component_ids = subset;
            entries.push_back(std::move(e));
            parts.push_back(obj->pick(subset));
        }
    }
    if (entries.empty()) throw DataError("build_index: dataset has no test objects");
    RetrievalIndex index = finish_index(std::move(entries), params, dataset, parts, threads);
    index.partial_cap = max_partials_per_object;
    return index;
}

RetrievalIndex build_single_part_index(const Dataset& dataset, const EncoderParams& params,
                                       int threads) {
    std::vector<IndexEntry> entries;
    std::vector<std::vector<Component>> parts;
    for (const ObjectRecord* obj : dataset.test_objects()) {
        for (const Component& c : obj->components) {
            IndexEntry e;
            e.id = partial_id(obj->id, {c.id});
            e.object_id = obj->id;
            e.component_ids = {c.id};
            e.label = c.label;
            entries.push_back(std::move(e));
            parts.push_back({c});
        }
    }
    if (entries.empty()) throw DataError("build_single_part_index: dataset has no test objects");
    return finish_index(std::move(entries), params, dataset, parts, threads);
}

namespace {

template <typename EnergyFn>
std::vector<Ranked> rank_by(const RetrievalIndex& index, std::size_t k, EnergyFn&& energy) {
    if (index.entries.empty()) throw DataError("retrieve: empty index");
    if (k > index.entries.size())
        throw DataError("retrieve: k exceeds index size");
    std::vector<Ranked> all;
    all.reserve(index.entries.size());
    for (const IndexEntry& e : index.entries) all.push_back({e.id, energy(e)});
    std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.id < b.id;
    });
    all.resize(k);
    return all;
}

}  // namespace

std::vector<Ranked> retrieve_complements(const RetrievalIndex& index, const DualEmbedding& query,
                                         std::size_t k) {
    return rank_by(index, k, [&](const IndexEntry& e) {
        return complementarity_energy(query, e.embedding);
    });
}

std::vector<Ranked> retrieve_interchangeable(const RetrievalIndex& index,
                                             const DualEmbedding& query, std::size_t k) {
    return rank_by(index, k, [&](const IndexEntry& e) {
        return interchangeability_energy(query, e.embedding);
    });
}

namespace {

std::size_t rank_of(const std::vector<std::string>& ranking, const std::string& id) {
    auto it = std::find(ranking.begin(), ranking.end(), id);
    if (it == ranking.end())
        throw DataError("metric: ground-truth id '" + id + "' not present in ranking");
    return static_cast<std::size_t>(it - ranking.begin()) + 1;  // 1-based
}

}  // namespace

double recall_at_n(const std::vector<std::vector<std::string>>& rankings,
                   const std::vector<std::string>& ground_truth, std::size_t n) {
    if (rankings.size() != ground_truth.size() || rankings.empty())
        throw DataError("recall_at_n: rankings and ground truth sizes disagree");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        if (rank_of(rankings[q], ground_truth[q]) <= n) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double percentile_rank(const std::vector<std::vector<std::string>>& rankings,
                       const std::vector<std::string>& ground_truth, Aggregate aggregate) {
    if (rankings.size() != ground_truth.size() || rankings.empty())
        throw DataError("percentile_rank: rankings and ground truth sizes disagree");
    std::vector<double> values;
    values.reserve(rankings.size());
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        const std::size_t m = rankings[q].size();
        const std::size_t r = rank_of(rankings[q], ground_truth[q]);
        values.push_back(100.0 * static_cast<double>(m - r + 1) / static_cast<double>(m));
    }
    if (aggregate == Aggregate::Mean) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return (m % 2 == 1) ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

ComplementMetrics evaluate_complements(const Dataset& dataset, const RetrievalIndex& index) {
    std::vector<std::vector<std::string>> rankings;
    std::vector<std::string> ground_truth;

    for (const ObjectRecord* obj : dataset.test_objects()) {
        for (const IndexEntry& e : index.entries) {
            if (e.object_id != obj->id) continue;
            if (e.component_ids.size() == obj->graph.nodes.size()) continue;  // no empty side
            std::vector<std::string> rest;
            for (const std::string& node : obj->graph.nodes) {
                if (!std::binary_search(e.component_ids.begin(), e.component_ids.end(), node))
                    rest.push_back(node);
            }
            const IndexEntry* gt = index.find(partial_id(obj->id, rest));
            if (!gt) continue;  // complement disconnected (or beyond the cap)

            auto ranked = retrieve_complements(index, e.embedding, index.entries.size());
            std::vector<std::string> ids;
            ids.reserve(ranked.size());
            for (const Ranked& r : ranked) ids.push_back(r.id);
            rankings.push_back(std::move(ids));
            ground_truth.push_back(gt->id);
        }
    }
    if (rankings.empty()) throw DataError("evaluate_complements: no usable queries in test split");

    ComplementMetrics m;
    m.recall_at_1 = recall_at_n(rankings, ground_truth, 1);
    m.recall_at_10 = recall_at_n(rankings, ground_truth, 10);
    m.median_percentile_rank = percentile_rank(rankings, ground_truth, Aggregate::Median);
    m.mean_percentile_rank = percentile_rank(rankings, ground_truth, Aggregate::Mean);
    m.num_queries = rankings.size();
    m.num_candidates = index.entries.size();
    return m;
}

std::vector<double> label_agreement_curve(const RetrievalIndex& index,
                                          const std::vector<std::size_t>& query_entries,
                                          std::size_t k_max) {
    for (const IndexEntry& e : index.entries) {
        if (e.label.empty())
            throw DataError("label_agreement_curve: unlabeled candidate " + e.id);
    }
    if (query_entries.empty()) throw DataError("label_agreement_curve: no queries");
    if (k_max == 0 || k_max >= index.entries.size())
        throw DataError("label_agreement_curve: k_max out of range");

    std::map<std::string, const std::string*> labels;
    for (const IndexEntry& e : index.entries) labels[e.id] = &e.label;

    std::vector<double> curve(k_max, 0.0);
    for (std::size_t qi : query_entries) {
        const IndexEntry& q = index.entries.at(qi);
        auto ranked = retrieve_interchangeable(index, q.embedding, index.entries.size());
        // self-match excluded from the neighbor list
        std::vector<const std::string*> neighbor_labels;
        for (const Ranked& r : ranked) {
            if (r.id == q.id) continue;
            neighbor_labels.push_back(labels.at(r.id));
        }
        std::size_t same = 0;
        for (std::size_t k = 1; k <= k_max; ++k) {
            if (*neighbor_labels[k - 1] == q.label) ++same;
            curve[k - 1] += static_cast<double>(same) / static_cast<double>(k);
        }
    }
    for (double& v : curve) v /= static_cast<double>(query_entries.size());
    return curve;
}

}  // namespace fse
