#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fse/encoder.hpp"
#include "fse/errors.hpp"

using fse::EmbedConfig;
using fse::EncoderParams;
using fse::Mat;

namespace {

Mat centered_cloud(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.4);
    Mat cloud(n, 3);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) cloud.data()[i] = normal(rng);
    const Eigen::RowVector3d lo = cloud.colwise().minCoeff();
    const Eigen::RowVector3d hi = cloud.colwise().maxCoeff();
    cloud.rowwise() -= 0.5 * (lo + hi);
    return cloud;
}

}  // namespace

TEST_CASE("init_params: shapes, zero biases, deterministic per seed") {
    EmbedConfig cfg;
    cfg.dim = 16;
    cfg.points = 64;
    EncoderParams p = fse::init_params(cfg, 5);
    REQUIRE(p.f_net.size() == 10);
    REQUIRE(p.g_net.size() == 10);
    CHECK(p.f_net[0].rows() == 3);
    CHECK(p.f_net[0].cols() == 64);
    CHECK(p.f_net[8].cols() == 16);  // head output
    CHECK(p.f_net[1].isZero());      // biases start at zero
    CHECK(p.t(0, 0) == doctest::Approx(0.1));
    CHECK(p.f_net[0] != p.g_net[0]);  // the two nets are independent draws

    EncoderParams q = fse::init_params(cfg, 5);
    for (std::size_t i = 0; i < 10; ++i) CHECK(p.f_net[i] == q.f_net[i]);
    EncoderParams r = fse::init_params(cfg, 6);
    CHECK(p.f_net[0] != r.f_net[0]);
}

TEST_CASE("embeddings are unit-norm with strictly positive coordinates") {
    EmbedConfig cfg;
    cfg.dim = 8;
    cfg.points = 32;
    EncoderParams p = fse::init_params(cfg, 1);
    for (std::uint64_t s = 0; s < 5; ++s) {
        fse::DualEmbedding e = fse::embed(p, centered_cloud(32, s));
        CHECK(e.f.size() == 8);
        CHECK(e.f.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(e.g.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((e.f.array() > 0.0).all());
        CHECK((e.g.array() > 0.0).all());
    }
}

TEST_CASE("embedding is invariant to point order, bit for bit") {
    EmbedConfig cfg;
    cfg.dim = 8;
    cfg.points = 48;
    EncoderParams p = fse::init_params(cfg, 2);
    Mat cloud = centered_cloud(48, 11);

    std::vector<int> perm(48);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    Mat shuffled(48, 3);
    for (int i = 0; i < 48; ++i) shuffled.row(i) = cloud.row(perm[i]);

    fse::DualEmbedding a = fse::embed(p, cloud);
    fse::DualEmbedding b = fse::embed(p, shuffled);
    CHECK(a.f == b.f);
    CHECK(a.g == b.g);
}

TEST_CASE("embedding is invariant to point duplication") {
    EmbedConfig small;
    small.dim = 8;
    small.points = 24;
    EmbedConfig big = small;
    big.points = 48;
    // same weights, different expected point count
    EncoderParams ps = fse::init_params(small, 4);
    EncoderParams pb = ps;
    pb.config = big;

    Mat cloud = centered_cloud(24, 12);
    Mat doubled(48, 3);
    doubled.topRows(24) = cloud;
    doubled.bottomRows(24) = cloud;

    fse::DualEmbedding a = fse::embed(ps, cloud);
    fse::DualEmbedding b = fse::embed(pb, doubled);
    CHECK(a.f == b.f);
    CHECK(a.g == b.g);
}

TEST_CASE("embed validates its input cloud") {
    EmbedConfig cfg;
    cfg.dim = 4;
    cfg.points = 16;
    EncoderParams p = fse::init_params(cfg, 0);
    CHECK_THROWS_AS(fse::embed(p, centered_cloud(15, 0)), fse::DataError);
    Mat off = centered_cloud(16, 0);
    off.array() += 0.5;  // bbox center no longer at the origin
    CHECK_THROWS_AS(fse::embed(p, off), fse::DataError);
}

TEST_CASE("embed_batch preserves order and matches embed, threaded or not") {
    EmbedConfig cfg;
    cfg.dim = 6;
    cfg.points = 20;
    EncoderParams p = fse::init_params(cfg, 9);
    std::vector<Mat> clouds;
    for (std::uint64_t s = 0; s < 7; ++s) clouds.push_back(centered_cloud(20, 100 + s));

    auto seq = fse::embed_batch(p, clouds, 1);
    auto par = fse::embed_batch(p, clouds, 3);
    REQUIRE(seq.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        fse::DualEmbedding one = fse::embed(p, clouds[i]);
        CHECK(seq[i].f == one.f);
        CHECK(seq[i].g == one.g);
        CHECK(par[i].f == one.f);
        CHECK(par[i].g == one.g);
    }
}

TEST_CASE("parameters round-trip through checkpoint files bit-exactly") {
    EmbedConfig cfg;
    cfg.dim = 8;
    cfg.points = 32;
    cfg.init_seed = 77;
    EncoderParams p = fse::init_params(cfg, 77);
    const std::string prefix = "test_encoder_ckpt";
    p.save(prefix);
    EncoderParams q = EncoderParams::load(prefix);
    std::filesystem::remove(prefix + ".fset");
    std::filesystem::remove(prefix + ".json");

    CHECK(q.config.dim == 8);
    CHECK(q.config.points == 32);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(q.f_net[i] == p.f_net[i]);
        CHECK(q.g_net[i] == p.g_net[i]);
    }
    CHECK(q.t == p.t);

    Mat cloud = centered_cloud(32, 1);
    fse::DualEmbedding a = fse::embed(p, cloud);
    fse::DualEmbedding b = fse::embed(q, cloud);
    CHECK(a.f == b.f);
    CHECK(a.g == b.g);
}

TEST_CASE("encoder gradients pass a finite-difference check") {
    EmbedConfig cfg;
    cfg.dim = 5;
    cfg.points = 16;
    EncoderParams p = fse::init_params(cfg, 13);
    Mat cloud = centered_cloud(16, 21);
    Mat target = Mat::Constant(1, 5, 0.3);

    fse::ad::Program prog = [&](fse::ad::Tape& t, const std::vector<fse::ad::Var>& params,
                                const std::vector<fse::ad::Var>& inputs) {
        fse::ad::Var emb = fse::encode_on_tape(t, params, inputs[0]);
        return t.sum(t.square(t.sub(emb, inputs[1])));
    };
    auto report = fse::ad::grad_check(prog, p.f_net, {cloud, target}, 1e-4, 99, 8);
    CHECK(report.passed);
    CHECK(report.worst < 1e-4);
}
