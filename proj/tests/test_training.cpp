#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fse/errors.hpp"
#include "fse/losses.hpp"
#include "fse/training.hpp"

using fse::Mat;

TEST_CASE("ranking loss on the worked 2x2 example") {
    Mat e(2, 2);
    e << 0.1, 0.4,
         0.2, 0.3;
    CHECK(fse::ranking_loss(e, 0.05) == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("threshold loss on the worked 2x2 example") {
    Mat e(2, 2);
    e << 0.1, 0.3,
         0.15, 0.25;
    CHECK(fse::threshold_loss(e, 0.05, 0.2) == doctest::Approx(0.075).epsilon(1e-12));
}

namespace {

// independent reference written as literal double loops
double ranking_oracle(const Mat& e, double alpha) {
    const Eigen::Index n = e.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) total += std::max(0.0, e(i, i) - e(i, j) + alpha);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != j) total += std::max(0.0, e(j, j) - e(i, j) + alpha);
    return total;
}

double threshold_oracle(const Mat& e, double alpha, double t) {
    const Eigen::Index n = e.rows();
    double pos = 0.0, neg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) pos += std::max(0.0, e(i, i) - (t - alpha / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) neg += std::max(0.0, (t + alpha / 2) - e(i, j));
    const double nd = static_cast<double>(n);
    return pos / nd + neg / (nd * (nd - 1));
}

Mat random_energy(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat e(n, n);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = u(rng);
    return e;
}

// builds the tape variant from a plain matrix with t as the only leaf
double tape_loss(const Mat& e, double alpha, double t, bool ranking, double* dt = nullptr) {
    fse::ad::Tape tape;
    const Eigen::Index n = e.rows();
    std::vector<std::vector<fse::ad::Var>> vars(n, std::vector<fse::ad::Var>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            vars[i][j] = tape.constant(Mat::Constant(1, 1, e(i, j)));
    fse::ad::Var tv = tape.leaf(Mat::Constant(1, 1, t));
    fse::ad::Var loss = ranking ? fse::ranking_loss_on_tape(tape, vars, alpha)
                                : fse::threshold_loss_on_tape(tape, vars, alpha, tv);
    const double value = tape.value_scalar(loss);
    if (dt) {
        tape.backward(loss);
        const Mat& g = tape.grad(tv);
        *dt = g.size() ? g(0, 0) : 0.0;
    }
    return value;
}

}  // namespace

TEST_CASE("losses match a double-loop oracle on random matrices") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 7);  // 2..8
        const Mat e = random_energy(rng, n);
        const double alpha = 0.01 + 0.2 * std::uniform_real_distribution<double>()(rng);
        const double t = std::uniform_real_distribution<double>()(rng);
        CHECK(fse::ranking_loss(e, alpha) ==
              doctest::Approx(ranking_oracle(e, alpha)).epsilon(1e-12));
        CHECK(fse::threshold_loss(e, alpha, t) ==
              doctest::Approx(threshold_oracle(e, alpha, t)).epsilon(1e-12));
        // tape variants agree with the plain ones
        CHECK(tape_loss(e, alpha, t, true) ==
              doctest::Approx(fse::ranking_loss(e, alpha)).epsilon(1e-12));
        CHECK(tape_loss(e, alpha, t, false) ==
              doctest::Approx(fse::threshold_loss(e, alpha, t)).epsilon(1e-12));
    }
}

TEST_CASE("ranking loss vanishes when every margin is satisfied") {
    Mat e(3, 3);
    e.setConstant(1.0);
    e.diagonal().setConstant(0.1);  // gaps of 0.9 >> alpha
    CHECK(fse::ranking_loss(e, 0.05) == 0.0);
}

TEST_CASE("threshold loss vanishes when t separates the energies by alpha") {
    Mat e(3, 3);
    e.setConstant(1.0);
    e.diagonal().setConstant(0.1);
    CHECK(fse::threshold_loss(e, 0.05, 0.5) == 0.0);
    // moving t toward the negatives reintroduces loss
    CHECK(fse::threshold_loss(e, 0.05, 1.2) > 0.0);
}

TEST_CASE("threshold loss gradient w.r.t. t matches finite differences") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat e = random_energy(rng, 4);
        const double alpha = 0.05;
        const double t = 0.37 + 0.01 * trial;
        double dt = 0.0;
        tape_loss(e, alpha, t, false, &dt);
        const double h = 1e-6;
        const double fd = (fse::threshold_loss(e, alpha, t + h) -
                           fse::threshold_loss(e, alpha, t - h)) /
                          (2 * h);
        CHECK(dt == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("losses reject malformed inputs") {
    Mat bad(1, 1);
    bad << 0.5;
    CHECK_THROWS_AS(fse::ranking_loss(bad, 0.05), fse::DataError);
    Mat nonfinite(2, 2);
    nonfinite << 0.1, std::nan(""), 0.2, 0.3;
    CHECK_THROWS_AS(fse::ranking_loss(nonfinite, 0.05), fse::NumericalError);
}

namespace {

fse::Dataset tiny_dataset(int count, std::uint64_t seed) {
    fse::GenConfig cfg;
    cfg.category = "table";
    cfg.count = count;
    cfg.seed = seed;
    return fse::generate_synthetic_dataset(cfg);
}

}  // namespace

TEST_CASE("build_batch: deterministic, valid partitions, centered clouds") {
    fse::Dataset ds = tiny_dataset(5, 3);
    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 32;

    auto b1 = fse::build_batch(ds, ec, 42, 6);
    auto b2 = fse::build_batch(ds, ec, 42, 6);
    auto b3 = fse::build_batch(ds, ec, 43, 6);
    REQUIRE(b1.size() == 6);
    bool any_diff = false;
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(b1[i].object_id == b2[i].object_id);
        CHECK(b1[i].query_cloud == b2[i].query_cloud);
        if (i < b3.size() && b1[i].query_cloud != b3[i].query_cloud) any_diff = true;
    }
    CHECK(any_diff);

    for (const auto& s : b1) {
        // query + complement partition the object's component set
        const fse::ObjectRecord* obj = nullptr;
        for (const auto& o : ds.objects)
            if (o.id == s.object_id) obj = &o;
        REQUIRE(obj != nullptr);
        std::vector<std::string> all = s.query_ids;
        all.insert(all.end(), s.complement_ids.begin(), s.complement_ids.end());
        std::sort(all.begin(), all.end());
        CHECK(all == obj->graph.nodes);
        CHECK_FALSE(s.query_ids.empty());
        CHECK_FALSE(s.complement_ids.empty());
        CHECK(s.query_cloud.rows() == 32);
        // clouds arrive bbox-centered, ready for the encoder
        const Eigen::RowVector3d lo = s.query_cloud.colwise().minCoeff();
        const Eigen::RowVector3d hi = s.query_cloud.colwise().maxCoeff();
        CHECK((0.5 * (lo + hi)).norm() < 1e-9);
    }
}

TEST_CASE("zero-epoch training returns the initial parameters") {
    fse::Dataset ds = tiny_dataset(4, 4);
    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 16;
    ec.init_seed = 5;
    fse::TrainConfig tc;
    tc.epochs = 0;

    fse::TrainResult r = fse::train(ds, ec, tc);
    fse::EncoderParams init = fse::init_params(ec, ec.init_seed);
    for (std::size_t i = 0; i < init.f_net.size(); ++i) CHECK(r.params.f_net[i] == init.f_net[i]);
    CHECK(r.adam.step == 0);
    CHECK(r.log.empty());
}

TEST_CASE("training is bit-deterministic per seed and reduces the loss") {
    fse::Dataset ds = tiny_dataset(5, 6);
    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 32;
    ec.init_seed = 7;
    fse::TrainConfig tc;
    tc.mode = fse::LossMode::Ranking;
    tc.epochs = 10;
    tc.batch = 4;
    tc.seed = 1;
    tc.adam.lr = 3e-3;

    std::ostringstream csv1, csv2;
    fse::TrainResult r1 = fse::train(ds, ec, tc, &csv1);
    fse::TrainResult r2 = fse::train(ds, ec, tc, &csv2);
    CHECK(csv1.str() == csv2.str());
    REQUIRE(r1.log.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(r1.log[i].mean_loss == r2.log[i].mean_loss);
    }
    for (std::size_t i = 0; i < r1.params.f_net.size(); ++i)
        CHECK(r1.params.f_net[i] == r2.params.f_net[i]);

    CHECK(r1.log.back().mean_loss < r1.log.front().mean_loss);
    CHECK(csv1.str().rfind("epoch,mean_loss,lr,recall10\n", 0) == 0);
}

TEST_CASE("threshold mode trains and moves the learnable threshold") {
    fse::Dataset ds = tiny_dataset(4, 8);
    fse::EmbedConfig ec;
    ec.dim = 4;
    ec.points = 24;
    ec.init_seed = 2;
    fse::TrainConfig tc;
    tc.mode = fse::LossMode::Threshold;
    tc.epochs = 6;
    tc.batch = 4;
    tc.seed = 2;

    fse::TrainResult r = fse::train(ds, ec, tc);
    CHECK(r.params.t(0, 0) != 0.1);  // gradient reached t
    CHECK(r.adam.step == static_cast<std::int64_t>(r.log.size()));
}

TEST_CASE("parse_loss_mode") {
    CHECK(fse::parse_loss_mode("ranking") == fse::LossMode::Ranking);
    CHECK(fse::parse_loss_mode("threshold") == fse::LossMode::Threshold);
    CHECK_THROWS_AS(fse::parse_loss_mode("hinge"), fse::UsageError);
}
