#pragma once

#include <Eigen/Core>

#include "fse/tensor_store.hpp"

namespace fse {

/// Fuzzy membership vector: nonnegative coordinates. Encoder outputs are
/// additionally unit l2-norm; the interchangeability energy depends on that
/// and rejects inputs violating it.
using FuzzyVector = Vec;

/// The (f, g) pair for one partial shape: f lives in the subset space,
/// g in the superset space.
struct DualEmbedding {
    FuzzyVector f;
    FuzzyVector g;
};

FuzzyVector fuzzy_meet(const FuzzyVector& a, const FuzzyVector& b);
FuzzyVector fuzzy_join(const FuzzyVector& a, const FuzzyVector& b);

/// Coordinatewise inclusion a_i <= b_i for all i.
bool is_subset(const FuzzyVector& a, const FuzzyVector& b);

/// Squared-hinge inclusion violation: sum_i max(0, a_i - b_i)^2.
/// Zero exactly when is_subset(a, b).
double directional_energy(const FuzzyVector& a, const FuzzyVector& b);

/// E_c(x -> y) = directional_energy(f(x), g(y)).
double complementarity_energy_oneway(const DualEmbedding& x, const DualEmbedding& y);

/// E_c(x, y) = E_c(x -> y) + E_c(y -> x). Symmetric by construction.
double complementarity_energy(const DualEmbedding& x, const DualEmbedding& y);

/// E_r(x, y) = |f(x) v f(y)|^2 - |g(x) ^ g(y)|^2. Requires unit-norm
/// nonnegative embeddings (checked to 1e-6); zero for identical inputs.
double interchangeability_energy(const DualEmbedding& x, const DualEmbedding& y);

// Executable forms of the join/meet energy bounds. a, b play the subset-space
// coordinates of two shapes and c the superset-space coordinates of a third
// (mirrored for the second bound). Slack 1e-12 absorbs rounding in the sums.
bool check_bound_join(const FuzzyVector& a, const FuzzyVector& b, const FuzzyVector& c,
                      double slack = 1e-12);
bool check_bound_meet(const FuzzyVector& a, const FuzzyVector& b, const FuzzyVector& c,
                      double slack = 1e-12);

/// Combined bound: (E_c(x,z) + E_c(y,z)) / 2
///   <= E_dir(f(x) v f(y), g(z)) + E_dir(f(z), g(x) ^ g(y)).
bool check_bound_combined(const DualEmbedding& x, const DualEmbedding& y, const DualEmbedding& z,
                          double slack = 1e-12);

}  // namespace fse
