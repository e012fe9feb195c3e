#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fse/errors.hpp"
#include "fse/retrieval.hpp"

using fse::DualEmbedding;
using fse::IndexEntry;
using fse::RetrievalIndex;
using fse::Vec;

namespace {

DualEmbedding unit_embedding(std::initializer_list<double> f, std::initializer_list<double> g) {
    DualEmbedding e;
    e.f = Vec(static_cast<Eigen::Index>(f.size()));
    e.g = Vec(static_cast<Eigen::Index>(g.size()));
    Eigen::Index i = 0;
    for (double x : f) e.f(i++) = x;
    i = 0;
    for (double x : g) e.g(i++) = x;
    e.f /= e.f.norm();
    e.g /= e.g.norm();
    return e;
}

DualEmbedding random_unit_embedding(std::mt19937_64& rng, Eigen::Index d) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    DualEmbedding e;
    e.f = Vec(d);
    e.g = Vec(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        e.f(i) = u(rng);
        e.g(i) = u(rng);
    }
    e.f /= e.f.norm();
    e.g /= e.g.norm();
    return e;
}

IndexEntry entry(const std::string& id, const std::string& label, const DualEmbedding& e) {
    IndexEntry ie;
    ie.id = id;
    ie.object_id = id.substr(0, id.find(':'));
    ie.label = label;
    ie.embedding = e;
    return ie;
}

// ranking of length m with the ground truth "gt" placed at 1-based rank r
std::vector<std::string> ranking_with_gt_at(std::size_t m, std::size_t r, const std::string& gt) {
    std::vector<std::string> ids;
    for (std::size_t i = 1; i <= m; ++i)
        ids.push_back(i == r ? gt : "filler_" + std::to_string(i));
    return ids;
}

}  // namespace

TEST_CASE("partial_id joins the object and sorted component ids") {
    CHECK(fse::partial_id("obj_003", {"leg0", "leg1"}) == "obj_003:leg0+leg1");
    CHECK(fse::partial_id("o", {"top"}) == "o:top");
}

TEST_CASE("recall_at_n on the worked fixture") {
    std::vector<std::vector<std::string>> rankings = {
        ranking_with_gt_at(25, 1, "gt0"), ranking_with_gt_at(25, 5, "gt1"),
        ranking_with_gt_at(25, 20, "gt2")};
    std::vector<std::string> gt = {"gt0", "gt1", "gt2"};
    CHECK(fse::recall_at_n(rankings, gt, 10) == doctest::Approx(200.0 / 3.0));
    CHECK(fse::recall_at_n(rankings, gt, 1) == doctest::Approx(100.0 / 3.0));
    CHECK(fse::recall_at_n(rankings, gt, 25) == doctest::Approx(100.0));
}

TEST_CASE("recall is monotone in n") {
    std::mt19937_64 rng(1);
    std::vector<std::vector<std::string>> rankings;
    std::vector<std::string> gt;
    for (int q = 0; q < 30; ++q) {
        const std::size_t r = 1 + rng() % 20;
        rankings.push_back(ranking_with_gt_at(20, r, "g" + std::to_string(q)));
        gt.push_back("g" + std::to_string(q));
    }
    double prev = 0.0;
    for (std::size_t n = 1; n <= 20; ++n) {
        const double rec = fse::recall_at_n(rankings, gt, n);
        CHECK(rec >= prev);
        prev = rec;
    }
    CHECK(prev == doctest::Approx(100.0));
}

TEST_CASE("percentile rank fixtures") {
    // rank 1 of M -> 100
    CHECK(fse::percentile_rank({ranking_with_gt_at(10, 1, "g")}, {"g"}, fse::Aggregate::Mean) ==
          doctest::Approx(100.0));
    // last of M -> 100/M
    CHECK(fse::percentile_rank({ranking_with_gt_at(10, 10, "g")}, {"g"}, fse::Aggregate::Mean) ==
          doctest::Approx(10.0));
    // per-query percentiles (100, 50, 90): median 90, mean 80
    std::vector<std::vector<std::string>> rankings = {
        ranking_with_gt_at(10, 1, "a"), ranking_with_gt_at(10, 6, "b"),
        ranking_with_gt_at(10, 2, "c")};
    std::vector<std::string> gt = {"a", "b", "c"};
    CHECK(fse::percentile_rank(rankings, gt, fse::Aggregate::Median) == doctest::Approx(90.0));
    CHECK(fse::percentile_rank(rankings, gt, fse::Aggregate::Mean) == doctest::Approx(80.0));
}

TEST_CASE("metrics reject a ground truth missing from its ranking") {
    CHECK_THROWS_AS(fse::recall_at_n({ranking_with_gt_at(5, 1, "x")}, {"absent"}, 1),
                    fse::DataError);
}

TEST_CASE("retrieval returns ascending energies with id tie-breaks") {
    RetrievalIndex index;
    const DualEmbedding shared = unit_embedding({1, 2, 3}, {3, 2, 1});
    index.entries = {entry("o:a", "l", shared), entry("o:b", "l", shared),
                     entry("o:c", "l", shared)};

    const DualEmbedding query = unit_embedding({2, 1, 1}, {1, 1, 2});
    auto ranked = fse::retrieve_complements(index, query, 3);
    REQUIRE(ranked.size() == 3);
    // identical candidates: energies tie, ids decide
    CHECK(ranked[0].id == "o:a");
    CHECK(ranked[1].id == "o:b");
    CHECK(ranked[2].id == "o:c");
    CHECK(ranked[0].energy == ranked[2].energy);

    CHECK_THROWS_AS(fse::retrieve_complements(index, query, 4), fse::DataError);
    CHECK_THROWS_AS(fse::retrieve_complements(RetrievalIndex{}, query, 1), fse::DataError);
}

TEST_CASE("an indexed query is its own nearest interchangeable match") {
    std::mt19937_64 rng(2);
    RetrievalIndex index;
    for (int i = 0; i < 8; ++i)
        index.entries.push_back(
            entry("o:p" + std::to_string(i), "l", random_unit_embedding(rng, 6)));
    std::sort(index.entries.begin(), index.entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });

    for (const IndexEntry& e : index.entries) {
        auto ranked = fse::retrieve_interchangeable(index, e.embedding, index.entries.size());
        CHECK(ranked[0].id == e.id);
        CHECK(ranked[0].energy == 0.0);
        for (std::size_t i = 1; i < ranked.size(); ++i)
            CHECK(ranked[i].energy >= ranked[i - 1].energy);
    }
}

TEST_CASE("label agreement curve: perfect, adversarial, and random cases") {
    // perfect: every candidate shares one label
    {
        std::mt19937_64 rng(3);
        RetrievalIndex index;
        for (int i = 0; i < 6; ++i)
            index.entries.push_back(
                entry("o:p" + std::to_string(i), "leg", random_unit_embedding(rng, 5)));
        auto curve = fse::label_agreement_curve(index, {0, 1, 2, 3, 4, 5}, 3);
        REQUIRE(curve.size() == 3);
        for (double v : curve) CHECK(v == doctest::Approx(1.0));
    }
    // adversarial: each embedding's closest neighbor carries the other label
    {
        RetrievalIndex index;
        const DualEmbedding e1 = unit_embedding({1, 0, 0}, {1, 0, 0});
        const DualEmbedding e2 = unit_embedding({0, 0, 1}, {0, 0, 1});
        index.entries = {entry("o:a0", "arm", e1), entry("o:a1", "back", e1),
                         entry("o:b0", "arm", e2), entry("o:b1", "back", e2)};
        auto curve = fse::label_agreement_curve(index, {0, 1, 2, 3}, 1);
        CHECK(curve[0] == doctest::Approx(0.0));
    }
    // random labels over random embeddings hover near 1/2
    {
        std::mt19937_64 rng(4);
        RetrievalIndex index;
        std::vector<std::size_t> queries;
        for (int i = 0; i < 400; ++i) {
            index.entries.push_back(entry("o:r" + std::to_string(i), (rng() & 1) ? "x" : "y",
                                          random_unit_embedding(rng, 8)));
            queries.push_back(i);
        }
        auto curve = fse::label_agreement_curve(index, queries, 5);
        for (double v : curve) {
            CHECK(v > 0.35);
            CHECK(v < 0.65);
        }
    }
}

TEST_CASE("label agreement curve validates its inputs") {
    RetrievalIndex index;
    const DualEmbedding e = unit_embedding({1, 1}, {1, 1});
    index.entries = {entry("o:a", "l", e), entry("o:b", "", e)};
    CHECK_THROWS_AS(fse::label_agreement_curve(index, {0}, 1), fse::DataError);
    index.entries[1].label = "l";
    CHECK_THROWS_AS(fse::label_agreement_curve(index, {}, 1), fse::DataError);
    CHECK_THROWS_AS(fse::label_agreement_curve(index, {0}, 2), fse::DataError);
}

TEST_CASE("index construction over a dataset is deterministic and complete") {
    fse::GenConfig gcfg;
    gcfg.category = "lamp";
    gcfg.count = 5;
    gcfg.seed = 12;
    fse::Dataset ds = fse::generate_synthetic_dataset(gcfg);

    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 32;
    fse::EncoderParams params = fse::init_params(ec, 1);

    RetrievalIndex i1 = fse::build_index(ds, params, 64);
    RetrievalIndex i2 = fse::build_index(ds, params, 64, 2);
    REQUIRE(i1.entries.size() == i2.entries.size());
    CHECK(i1.entries.size() >= ds.test_objects().size());  // at least the full assemblies
    for (std::size_t i = 0; i < i1.entries.size(); ++i) {
        CHECK(i1.entries[i].id == i2.entries[i].id);
        CHECK(i1.entries[i].embedding.f == i2.entries[i].embedding.f);
        if (i > 0) CHECK(i1.entries[i - 1].id < i1.entries[i].id);
    }
    CHECK(i1.find(i1.entries.front().id) == &i1.entries.front());
    CHECK(i1.find("no_such_id") == nullptr);

    // the full protocol runs and reports sane numbers on an untrained encoder
    fse::ComplementMetrics m = fse::evaluate_complements(ds, i1);
    CHECK(m.num_queries > 0);
    CHECK(m.num_candidates == i1.entries.size());
    CHECK(m.recall_at_1 >= 0.0);
    CHECK(m.recall_at_10 >= m.recall_at_1);
    CHECK(m.mean_percentile_rank > 0.0);
    CHECK(m.mean_percentile_rank <= 100.0);
}

TEST_CASE("single-part index carries labels for every entry") {
    fse::GenConfig gcfg;
    gcfg.category = "chair";
    gcfg.count = 5;
    gcfg.seed = 2;
    fse::Dataset ds = fse::generate_synthetic_dataset(gcfg);
    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 32;
    fse::EncoderParams params = fse::init_params(ec, 3);

    RetrievalIndex idx = fse::build_single_part_index(ds, params);
    std::size_t expected = 0;
    for (const auto* obj : ds.test_objects()) expected += obj->components.size();
    CHECK(idx.entries.size() == expected);
    for (const auto& e : idx.entries) {
        CHECK_FALSE(e.label.empty());
        CHECK(e.component_ids.size() == 1);
    }
}
