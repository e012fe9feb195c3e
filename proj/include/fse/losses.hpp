#pragma once

#include <vector>

#include "fse/autodiff.hpp"
#include "fse/tensor_store.hpp"

namespace fse {

/// Pairwise ranking loss over an N x N energy matrix where entry (i, j) is
/// the both-way complementarity energy of pair (x_i, y_j) and the diagonal
/// holds the positives:
///   sum_i sum_{j!=i} max(0, E(i,i) - E(i,j) + alpha)
/// + sum_j sum_{i!=j} max(0, E(j,j) - E(i,j) + alpha)
double ranking_loss(const Mat& energies, double alpha);

/// Absolute-threshold loss with learnable t:
///   (1/N)        sum_i      max(0, E(i,i) - (t - alpha/2))
/// + (1/(N(N-1))) sum_{i!=j} max(0, (t + alpha/2) - E(i,j))
double threshold_loss(const Mat& energies, double alpha, double t);

// Tape-building counterparts operating on scalar energy nodes (row-major
// N x N). The threshold variant routes gradient into the t node.
ad::Var ranking_loss_on_tape(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& energies,
                             double alpha);
ad::Var threshold_loss_on_tape(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& energies,
                               double alpha, ad::Var t);

/// E_dir node: sum_i max(0, a_i - b_i)^2 for two row-vector nodes.
ad::Var directional_energy_on_tape(ad::Tape& tape, ad::Var a, ad::Var b);

}  // namespace fse
