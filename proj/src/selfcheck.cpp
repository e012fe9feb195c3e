#include "fse/selfcheck.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "fse/autodiff.hpp"
#include "fse/encoder.hpp"
#include "fse/fuzzy.hpp"
#include "fse/losses.hpp"

namespace fse {

namespace {

Vec random_nonnegative(std::mt19937_64& rng, int dim, double scale) {
    std::uniform_real_distribution<double> uni(0.0, scale);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = uni(rng);
    return v;
}

Vec random_unit_nonnegative(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = std::abs(normal(rng));
    return v / v.norm();
}

}  // namespace

CheckOutcome run_property_sweep(std::size_t samples, std::uint64_t seed) {
    CheckOutcome out;
    std::ostringstream report;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni01(0.0, 1.0);

    for (int dim : {2, 16, 100}) {
        std::size_t fail_join = 0, fail_meet = 0, fail_combined = 0;
        std::size_t fail_consistency = 0, fail_r = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            Vec a = random_nonnegative(rng, dim, 1.5);
            Vec b = random_nonnegative(rng, dim, 1.5);
            Vec c = random_nonnegative(rng, dim, 1.5);
            // force some boundary-equal coordinates
            if (uni01(rng) < 0.25) {
                for (int i = 0; i < dim; i += 2) a[i] = b[i];
            }
            if (!check_bound_join(a, b, c)) ++fail_join;
            if (!check_bound_meet(a, b, c)) ++fail_meet;

            const double e = directional_energy(a, b);
            const bool subset = is_subset(a, b);
            const double via_meet = (a - fuzzy_meet(a, b)).squaredNorm();
            if ((e == 0.0) != subset || std::abs(e - via_meet) > 1e-12) ++fail_consistency;

            DualEmbedding x{random_unit_nonnegative(rng, dim), random_unit_nonnegative(rng, dim)};
            DualEmbedding y{random_unit_nonnegative(rng, dim), random_unit_nonnegative(rng, dim)};
            DualEmbedding z{random_unit_nonnegative(rng, dim), random_unit_nonnegative(rng, dim)};
            if (!check_bound_combined(x, y, z)) ++fail_combined;

            const double er = interchangeability_energy(x, y);
            const double er_swapped = interchangeability_energy(y, x);
            if (er < 0.0 || er != er_swapped || interchangeability_energy(x, x) > 1e-15) ++fail_r;
        }
        report << "D=" << dim << ": " << samples << " triples, failures: join-bound=" << fail_join
               << " meet-bound=" << fail_meet << " combined-bound=" << fail_combined
               << " inclusion-consistency=" << fail_consistency << " interchangeability=" << fail_r
               << "\n";
        if (fail_join || fail_meet || fail_combined || fail_consistency || fail_r)
            out.passed = false;
    }
    out.report = report.str();
    return out;
}

CheckOutcome run_gradient_checks(int draws, std::uint64_t seed) {
    CheckOutcome out;
    std::ostringstream report;
    std::mt19937_64 rng(seed);

    int worst_redraws = 0;
    double worst_err = 0.0;
    for (int d = 0; d < draws; ++d) {
        std::uniform_int_distribution<int> dim_dist(4, 8);
        const int dim = dim_dist(rng);
        const int points = std::uniform_int_distribution<int>(2, 8)(rng) * 8;  // 16..64
        const bool use_threshold = (d % 2 == 1);

        EmbedConfig cfg;
        cfg.dim = dim;
        cfg.points = points;
        EncoderParams params = init_params(cfg, rng());

        std::normal_distribution<double> normal(0.0, 0.4);
        std::vector<Mat> clouds;
        for (int i = 0; i < 4; ++i) {  // two pairs -> 2x2 energy matrix
            Mat c(points, 3);
            for (Eigen::Index r = 0; r < c.rows(); ++r)
                for (int j = 0; j < 3; ++j) c(r, j) = normal(rng);
            clouds.push_back(std::move(c));
        }

        const double alpha = 0.05;
        ad::Program program = [&, use_threshold](ad::Tape& tape, const std::vector<ad::Var>& p,
                                                 const std::vector<ad::Var>& inputs) {
            const std::size_t half = params.f_net.size();
            std::vector<ad::Var> f_net(p.begin(), p.begin() + half);
            std::vector<ad::Var> g_net(p.begin() + half, p.begin() + 2 * half);
            std::vector<ad::Var> fx(2), gx(2), fy(2), gy(2);
            for (int i = 0; i < 2; ++i) {
                fx[i] = encode_on_tape(tape, f_net, inputs[i]);
                gx[i] = encode_on_tape(tape, g_net, inputs[i]);
                fy[i] = encode_on_tape(tape, f_net, inputs[2 + i]);
                gy[i] = encode_on_tape(tape, g_net, inputs[2 + i]);
            }
            std::vector<std::vector<ad::Var>> e(2, std::vector<ad::Var>(2));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    e[i][j] = tape.add(directional_energy_on_tape(tape, fx[i], gy[j]),
                                       directional_energy_on_tape(tape, fy[j], gx[i]));
            return use_threshold ? threshold_loss_on_tape(tape, e, alpha, p.back())
                                 : ranking_loss_on_tape(tape, e, alpha);
        };

        auto check = ad::grad_check(program, params.flatten(), clouds, 1e-4, rng(), 6);
        worst_err = std::max(worst_err, check.worst);
        worst_redraws = std::max(worst_redraws, check.redraws);
        if (!check.passed) {
            out.passed = false;
            report << "draw " << d << " (dim=" << dim << ", points=" << points
                   << ", loss=" << (use_threshold ? "threshold" : "ranking")
                   << "): FAILED, worst rel err " << check.worst << "\n";
        }
    }
    report << draws << " encoder+loss draws, worst rel err " << worst_err
           << ", max kink redraws per draw " << worst_redraws << "\n";

    // corrupted-gradient self-test: a x1.01 scale must be flagged at 1e-4
    {
        Mat p(1, 3);
        p << 1.0, 2.0, 3.0;
        ad::Program quad = [](ad::Tape& tape, const std::vector<ad::Var>& params,
                              const std::vector<ad::Var>&) {
            return tape.sum(tape.square(params[0]));
        };
        auto fb = ad::forward_backward(quad, {p}, {});
        const Mat corrupted = fb.grads[0] * 1.01;
        double max_rel = 0.0;
        const double h = 1e-5;
        for (int k = 0; k < 3; ++k) {
            Mat pp = p, pm = p;
            pp(0, k) += h;
            pm(0, k) -= h;
            const double numeric = (pp.squaredNorm() - pm.squaredNorm()) / (2 * h);
            const double rel = std::abs(corrupted(0, k) - numeric) /
                               std::max(1e-8, std::abs(corrupted(0, k)) + std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
        const bool flagged = max_rel > 1e-4;
        report << "corrupted-gradient self-test: " << (flagged ? "flagged" : "MISSED") << "\n";
        if (!flagged) out.passed = false;
    }

    out.report = report.str();
    return out;
}

}  // namespace fse
