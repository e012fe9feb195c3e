#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fse/contact_graph.hpp"
#include "fse/mesh.hpp"

namespace fse {

/// One generated object: labeled components scaled to unit radius about the
/// assembly centroid, plus its contact graph.
struct ObjectRecord {
    std::string id;
    bool test = false;
    std::vector<Component> components;
    ContactGraph graph;

    std::vector<Component> pick(const std::vector<std::string>& ids) const;
};

struct Dataset {
    std::string category;
    std::uint64_t seed = 0;
    double tau = 0.05;
    std::vector<ObjectRecord> objects;

    std::vector<const ObjectRecord*> train_objects() const;
    std::vector<const ObjectRecord*> test_objects() const;
};

struct GenConfig {
    std::string category = "table";  // table | chair | lamp
    int count = 10;
    std::uint64_t seed = 0;
    double tau = 0.05;
};

/// splitmix64-style per-object seed derivation; keeps parallel generation
/// deterministic.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Procedural assemblies with part labels. Objects are split 80/20 into
/// train/test by index (last fifth is test). Each object's contact graph is
/// verified connected; templates regenerate with a mutated seed on failure
/// (bounded retries).
Dataset generate_synthetic_dataset(const GenConfig& config);

void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace fse
