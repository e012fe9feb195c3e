#include "fse/contact_graph.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "fse/errors.hpp"

namespace fse {

bool ContactGraph::has_edge(const std::string& u, const std::string& v) const {
    auto e = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
    return std::find(edges.begin(), edges.end(), e) != edges.end();
}

std::vector<std::string> ContactGraph::neighbors(const std::string& u) const {
    std::vector<std::string> out;
    for (const auto& [a, b] : edges) {
        if (a == u) out.push_back(b);
        if (b == u) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::string>> ContactGraph::connected_pieces(
    const std::vector<std::string>& subset) const {
    std::set<std::string> remaining(subset.begin(), subset.end());
    std::vector<std::vector<std::string>> pieces;
    while (!remaining.empty()) {
        std::vector<std::string> stack{*remaining.begin()};
        remaining.erase(remaining.begin());
        std::vector<std::string> piece;
        while (!stack.empty()) {
            std::string u = stack.back();
            stack.pop_back();
            piece.push_back(u);
            for (const std::string& v : neighbors(u)) {
                auto it = remaining.find(v);
                if (it != remaining.end()) {
                    remaining.erase(it);
                    stack.push_back(v);
                }
            }
        }
        std::sort(piece.begin(), piece.end());
        pieces.push_back(std::move(piece));
    }
    std::sort(pieces.begin(), pieces.end());
    return pieces;
}

bool ContactGraph::is_connected() const {
    if (nodes.empty()) return false;
    return connected_pieces(nodes).size() == 1;
}

namespace {

double min_sample_distance(const Eigen::Matrix<double, Eigen::Dynamic, 3>& a,
                           const Eigen::Matrix<double, Eigen::Dynamic, 3>& b, double early_exit) {
    double best = std::numeric_limits<double>::infinity();
    const double exit_sq = early_exit * early_exit;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            const double d = (a.row(i) - b.row(j)).squaredNorm();
            if (d < best) {
                best = d;
                if (best < exit_sq) return std::sqrt(best);
            }
        }
    }
    return std::sqrt(best);
}

constexpr int kContactSamples = 2048;
constexpr std::uint64_t kContactSeed = 0x5e3d0c7a11ULL;

}  // namespace

ContactGraph build_contact_graph_unchecked(const std::vector<Component>& components, double tau) {
    if (components.empty()) throw DataError("build_contact_graph: no components");
    if (tau <= 0.0) throw DataError("build_contact_graph: tau must be positive");

    std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> samples;
    samples.reserve(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
        samples.push_back(sample_surface(components[i].mesh, kContactSamples, kContactSeed + i));
    }

    ContactGraph g;
    for (const Component& c : components) g.nodes.push_back(c.id);
    std::sort(g.nodes.begin(), g.nodes.end());
    if (std::adjacent_find(g.nodes.begin(), g.nodes.end()) != g.nodes.end())
        throw DataError("build_contact_graph: duplicate component ids");

    for (std::size_t i = 0; i < components.size(); ++i) {
        for (std::size_t j = i + 1; j < components.size(); ++j) {
            if (min_sample_distance(samples[i], samples[j], tau) < tau) {
                auto e = components[i].id < components[j].id
                             ? std::make_pair(components[i].id, components[j].id)
                             : std::make_pair(components[j].id, components[i].id);
                g.edges.push_back(std::move(e));
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

ContactGraph build_contact_graph(const std::vector<Component>& components, double tau) {
    ContactGraph g = build_contact_graph_unchecked(components, tau);
    auto pieces = g.connected_pieces(g.nodes);
    if (pieces.size() > 1) {
        std::string msg = "build_contact_graph: graph is disconnected; pieces:";
        for (const auto& piece : pieces) {
            msg += " {";
            for (std::size_t i = 0; i < piece.size(); ++i)
                msg += (i ? "," : "") + piece[i];
            msg += "}";
        }
        throw DataError(msg);
    }
    return g;
}

SplitPair split_random(const ContactGraph& graph, std::uint64_t seed) {
    const std::size_t m = graph.nodes.size();
    if (m < 2) throw DataError("split_random: graph needs at least 2 nodes");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size_dist(1, m - 1);
    const std::size_t target = size_dist(rng);

    std::uniform_int_distribution<std::size_t> start_dist(0, m - 1);
    std::set<std::string> chosen{graph.nodes[start_dist(rng)]};

    std::vector<std::string> frontier;
    auto refresh_frontier = [&] {
        frontier.clear();
        for (const std::string& u : chosen) {
            for (const std::string& v : graph.neighbors(u)) {
                if (!chosen.count(v)) frontier.push_back(v);
            }
        }
        std::sort(frontier.begin(), frontier.end());
        frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    };

    while (chosen.size() < target) {
        refresh_frontier();
        if (frontier.empty()) break;  // cannot happen on a connected graph
        std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
        chosen.insert(frontier[pick(rng)]);
    }

    SplitPair pair;
    for (const std::string& u : graph.nodes) {
        if (chosen.count(u)) pair.query.push_back(u);
        else pair.complement.push_back(u);
    }
    return pair;
}

std::vector<std::vector<std::string>> enumerate_partials(const ContactGraph& graph,
                                                         std::size_t max_count) {
    const std::size_t n = graph.nodes.size();
    if (n == 0 || !graph.is_connected())
        throw DataError("enumerate_partials: graph must be nonempty and connected");
    if (n > 20) throw DataError("enumerate_partials: too many components (max 20)");

    // adjacency over node indices
    std::vector<std::uint32_t> adj(n, 0);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[graph.nodes[i]] = i;
    for (const auto& [a, b] : graph.edges) {
        const std::size_t i = index.at(a), j = index.at(b);
        adj[i] |= 1u << j;
        adj[j] |= 1u << i;
    }

    auto mask_connected = [&](std::uint32_t mask) {
        const std::uint32_t first = mask & (~mask + 1);
        std::uint32_t seen = first;
        std::uint32_t frontier = first;
        while (frontier) {
            std::uint32_t next = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (frontier & (1u << i)) next |= adj[i] & mask;
            }
            next &= ~seen;
            seen |= next;
            frontier = next;
        }
        return seen == mask;
    };

    std::vector<std::vector<std::string>> result;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        if (!mask_connected(mask)) continue;
        std::vector<std::string> subset;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) subset.push_back(graph.nodes[i]);
        }
        result.push_back(std::move(subset));
    }
    std::sort(result.begin(), result.end());
    if (result.size() > max_count) result.resize(max_count);
    return result;
}

}  // namespace fse
