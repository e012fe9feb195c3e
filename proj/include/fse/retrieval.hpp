#pragma once

#include <string>
#include <vector>

#include "fse/dataset.hpp"
#include "fse/encoder.hpp"
#include "fse/fuzzy.hpp"

namespace fse {

struct IndexEntry {
    std::string id;  // object_id + ":" + joined component ids
    std::string object_id;
    std::vector<std::string> component_ids;
    std::string label;  // single-part label, empty for multi-component entries
    DualEmbedding embedding;
};

/// Immutable database of embedded candidate partial shapes, in deterministic
/// (id-sorted) order.
struct RetrievalIndex {
    std::vector<IndexEntry> entries;
    std::size_t partial_cap = 0;  // enumeration cap used at build time

    const IndexEntry* find(const std::string& id) const;
};

std::string partial_id(const std::string& object_id, const std::vector<std::string>& comp_ids);

/// Enumerates connected partials of every test object (capped per object),
/// samples and embeds their clouds. Cloud seeds are derived from the dataset
/// seed and partial id, so the index is reproducible.
RetrievalIndex build_index(const Dataset& dataset, const EncoderParams& params,
                           std::size_t max_partials_per_object = 4096, int threads = 1);

/// Single-part variant: one entry per labeled component of each test object.
RetrievalIndex build_single_part_index(const Dataset& dataset, const EncoderParams& params,
                                       int threads = 1);

struct Ranked {
    std::string id;
    double energy = 0.0;
};

/// Top-k ascending by both-way complementarity energy; ties broken by id.
std::vector<Ranked> retrieve_complements(const RetrievalIndex& index, const DualEmbedding& query,
                                         std::size_t k);

/// Top-k ascending by interchangeability energy; ties broken by id. A query
/// present in the index ranks first with energy 0.
std::vector<Ranked> retrieve_interchangeable(const RetrievalIndex& index,
                                             const DualEmbedding& query, std::size_t k);

/// Percentage of queries whose ground-truth id appears within the top n of
/// its full ranking.
double recall_at_n(const std::vector<std::vector<std::string>>& rankings,
                   const std::vector<std::string>& ground_truth, std::size_t n);

enum class Aggregate { Median, Mean };

/// Per query: 100 * (#candidates ranked no better than the ground truth) /
/// #candidates; aggregated by median or mean.
double percentile_rank(const std::vector<std::vector<std::string>>& rankings,
                       const std::vector<std::string>& ground_truth, Aggregate aggregate);

struct ComplementMetrics {
    double recall_at_1 = 0.0;
    double recall_at_10 = 0.0;
    double median_percentile_rank = 0.0;
    double mean_percentile_rank = 0.0;
    std::size_t num_queries = 0;
    std::size_t num_candidates = 0;
};

/// The full complement-retrieval protocol: every index entry whose complement
/// (the rest of its object's components) is itself a connected partial in the
/// index becomes a query, with that complement as ground truth.
ComplementMetrics evaluate_complements(const Dataset& dataset, const RetrievalIndex& index);

/// Mean same-label ratio among the top-k interchangeability neighbors
/// (self-matches by id excluded), for k = 1..k_max. All index entries must
/// carry labels.
std::vector<double> label_agreement_curve(const RetrievalIndex& index,
                                          const std::vector<std::size_t>& query_entries,
                                          std::size_t k_max);

}  // namespace fse
