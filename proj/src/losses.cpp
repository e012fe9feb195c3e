#include "fse/losses.hpp"

#include <algorithm>
#include <string>

#include "fse/errors.hpp"

namespace fse {

namespace {

void require_square(const Mat& e) {
    if (e.rows() != e.cols() || e.rows() < 2)
        throw DataError("loss: energy matrix must be square with N >= 2, got " +
                        std::to_string(e.rows()) + "x" + std::to_string(e.cols()));
    if (!e.allFinite()) throw NumericalError("loss: non-finite energy matrix");
}

}  // namespace

double ranking_loss(const Mat& e, double alpha) {
    require_square(e);
    const Eigen::Index n = e.rows();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            loss += std::max(0.0, e(i, i) - e(i, j) + alpha);  // row positive vs row negative
            loss += std::max(0.0, e(j, j) - e(i, j) + alpha);  // column positive vs same negative
        }
    }
    return loss;
}

double threshold_loss(const Mat& e, double alpha, double t) {
    require_square(e);
    const Eigen::Index n = e.rows();
    double pos = 0.0, neg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        pos += std::max(0.0, e(i, i) - (t - 0.5 * alpha));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) neg += std::max(0.0, (t + 0.5 * alpha) - e(i, j));
        }
    }
    const double nd = static_cast<double>(n);
    return pos / nd + neg / (nd * (nd - 1.0));
}

ad::Var directional_energy_on_tape(ad::Tape& tape, ad::Var a, ad::Var b) {
    return tape.sum(tape.square(tape.relu(tape.sub(a, b))));
}

namespace {

ad::Var hinge(ad::Tape& tape, ad::Var x) { return tape.relu(x); }

void require_square_vars(const std::vector<std::vector<ad::Var>>& e) {
    const std::size_t n = e.size();
    if (n < 2) throw DataError("loss: energy matrix must have N >= 2");
    for (const auto& row : e)
        if (row.size() != n) throw DataError("loss: energy matrix must be square");
}

}  // namespace

ad::Var ranking_loss_on_tape(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& e,
                             double alpha) {
    require_square_vars(e);
    const std::size_t n = e.size();
    ad::Var loss = tape.constant(Mat::Zero(1, 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            loss = tape.add(loss, hinge(tape, tape.add_const(tape.sub(e[i][i], e[i][j]), alpha)));
            loss = tape.add(loss, hinge(tape, tape.add_const(tape.sub(e[j][j], e[i][j]), alpha)));
        }
    }
    return loss;
}

ad::Var threshold_loss_on_tape(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& e,
                               double alpha, ad::Var t) {
    require_square_vars(e);
    const std::size_t n = e.size();
    ad::Var pos = tape.constant(Mat::Zero(1, 1));
    ad::Var neg = tape.constant(Mat::Zero(1, 1));
    for (std::size_t i = 0; i < n; ++i) {
        // E(i,i) - t + alpha/2
        pos = tape.add(pos, hinge(tape, tape.add_const(tape.sub(e[i][i], t), 0.5 * alpha)));
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            // t - E(i,j) + alpha/2
            neg = tape.add(neg, hinge(tape, tape.add_const(tape.sub(t, e[i][j]), 0.5 * alpha)));
        }
    }
    const double nd = static_cast<double>(n);
    return tape.add(tape.scale(pos, 1.0 / nd), tape.scale(neg, 1.0 / (nd * (nd - 1.0))));
}

}  // namespace fse
