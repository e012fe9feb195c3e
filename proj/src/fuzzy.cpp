#include "fse/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fse/errors.hpp"

namespace fse {

namespace {

void require_same_dim(const FuzzyVector& a, const FuzzyVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw DataError(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
    }
}

void require_unit_norm(const FuzzyVector& v, const char* what) {
    if (std::abs(v.norm() - 1.0) > 1e-6) {
        throw DataError(std::string(what) + ": embedding is not unit-norm (|v| = " +
                        std::to_string(v.norm()) + ")");
    }
}

}  // namespace

FuzzyVector fuzzy_meet(const FuzzyVector& a, const FuzzyVector& b) {
    require_same_dim(a, b, "fuzzy_meet");
    return a.cwiseMin(b);
}

FuzzyVector fuzzy_join(const FuzzyVector& a, const FuzzyVector& b) {
    require_same_dim(a, b, "fuzzy_join");
    return a.cwiseMax(b);
}

bool is_subset(const FuzzyVector& a, const FuzzyVector& b) {
    require_same_dim(a, b, "is_subset");
    return (a.array() <= b.array()).all();
}

double directional_energy(const FuzzyVector& a, const FuzzyVector& b) {
    require_same_dim(a, b, "directional_energy");
    return (a - b).cwiseMax(0.0).squaredNorm();
}

double complementarity_energy_oneway(const DualEmbedding& x, const DualEmbedding& y) {
    return directional_energy(x.f, y.g);
}

double complementarity_energy(const DualEmbedding& x, const DualEmbedding& y) {
    return complementarity_energy_oneway(x, y) + complementarity_energy_oneway(y, x);
}

double interchangeability_energy(const DualEmbedding& x, const DualEmbedding& y) {
    require_same_dim(x.f, y.f, "interchangeability_energy");
    require_same_dim(x.g, y.g, "interchangeability_energy");
    require_unit_norm(x.f, "interchangeability_energy f(x)");
    require_unit_norm(x.g, "interchangeability_energy g(x)");
    require_unit_norm(y.f, "interchangeability_energy f(y)");
    require_unit_norm(y.g, "interchangeability_energy g(y)");
    // Under the unit-norm constraint this equals |f(x) v f(y)|^2 - |g(x) ^ g(y)|^2,
    // but referencing each input's own norm instead of the constant 1 makes the
    // energy exactly zero for identical inputs and nonnegative in floating point.
    const double sq_join = fuzzy_join(x.f, y.f).squaredNorm();
    const double sq_meet = fuzzy_meet(x.g, y.g).squaredNorm();
    return (sq_join - 0.5 * (x.f.squaredNorm() + y.f.squaredNorm())) +
           (0.5 * (x.g.squaredNorm() + y.g.squaredNorm()) - sq_meet);
}

bool check_bound_join(const FuzzyVector& a, const FuzzyVector& b, const FuzzyVector& c,
                      double slack) {
    const double lhs = std::max(directional_energy(a, c), directional_energy(b, c));
    return lhs <= directional_energy(fuzzy_join(a, b), c) + slack;
}

bool check_bound_meet(const FuzzyVector& a, const FuzzyVector& b, const FuzzyVector& c,
                      double slack) {
    const double lhs = std::max(directional_energy(c, a), directional_energy(c, b));
    return lhs <= directional_energy(c, fuzzy_meet(a, b)) + slack;
}

bool check_bound_combined(const DualEmbedding& x, const DualEmbedding& y, const DualEmbedding& z,
                          double slack) {
    const double lhs = 0.5 * (complementarity_energy(x, z) + complementarity_energy(y, z));
    const double rhs = directional_energy(fuzzy_join(x.f, y.f), z.g) +
                       directional_energy(z.f, fuzzy_meet(x.g, y.g));
    return lhs <= rhs + slack;
}

}  // namespace fse
