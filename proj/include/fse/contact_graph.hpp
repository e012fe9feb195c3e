#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fse/mesh.hpp"

namespace fse {

/// Simple undirected proximity graph over component ids.
struct ContactGraph {
    std::vector<std::string> nodes;                        // sorted, unique
    std::vector<std::pair<std::string, std::string>> edges;  // first < second

    bool has_edge(const std::string& u, const std::string& v) const;
    std::vector<std::string> neighbors(const std::string& u) const;
    bool is_connected() const;
    /// Connected components of the induced subgraph over `subset`.
    std::vector<std::vector<std::string>> connected_pieces(
        const std::vector<std::string>& subset) const;
};

/// A query/complement partition of an object's components. The query side's
/// induced subgraph is connected; the complement side may be disconnected.
struct SplitPair {
    std::vector<std::string> query;       // sorted ids
    std::vector<std::string> complement;  // sorted ids
};

/// Edges between components whose surfaces come within `tau` of each other.
/// Surface distance is approximated as the minimum pairwise distance between
/// dense point samplings (2048 points per component, fixed internal seed).
/// Throws DataError listing the pieces if the result is disconnected.
ContactGraph build_contact_graph(const std::vector<Component>& components, double tau);

/// Variant that does not require connectivity (generator retry loop uses it).
ContactGraph build_contact_graph_unchecked(const std::vector<Component>& components, double tau);

/// Random split: query side grown by randomized breadth-first expansion to a
/// size drawn uniformly from [1, m-1]; complement is the rest. Deterministic
/// per seed. Throws DataError on single-node graphs.
SplitPair split_random(const ContactGraph& graph, std::uint64_t seed);

/// All connected induced subgraphs in lexicographic order over sorted id
/// tuples, capped at max_count.
std::vector<std::vector<std::string>> enumerate_partials(const ContactGraph& graph,
                                                         std::size_t max_count);

}  // namespace fse
