#include "fse/encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "fse/errors.hpp"
#include "json.hpp"

namespace fse {

namespace {

const int kWidths[] = {3, 64, 128, 128};  // per-point transform
const int kHead = 128;                    // head hidden width

std::vector<Mat> init_net(int dim, std::mt19937_64& rng) {
    auto uniform_fan_in = [&](int rows, int cols) {
        const double s = 1.0 / std::sqrt(static_cast<double>(rows));
        std::uniform_real_distribution<double> dist(-s, s);
        Mat w(rows, cols);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
        return w;
    };
    std::vector<Mat> net;
    for (int l = 0; l + 1 < 4; ++l) {
        net.push_back(uniform_fan_in(kWidths[l], kWidths[l + 1]));
        net.push_back(Mat::Zero(1, kWidths[l + 1]));
    }
    net.push_back(uniform_fan_in(kWidths[3], kHead));
    net.push_back(Mat::Zero(1, kHead));
    net.push_back(uniform_fan_in(kHead, dim));
    net.push_back(Mat::Zero(1, dim));
    return net;
}

}  // namespace

std::vector<Mat> EncoderParams::flatten() const {
    std::vector<Mat> out = f_net;
    out.insert(out.end(), g_net.begin(), g_net.end());
    out.push_back(t);
    return out;
}

void EncoderParams::unflatten(const std::vector<Mat>& flat) {
    const std::size_t half = f_net.size();
    for (std::size_t i = 0; i < half; ++i) f_net[i] = flat[i];
    for (std::size_t i = 0; i < half; ++i) g_net[i] = flat[half + i];
    t = flat.back();
}

EncoderParams init_params(const EmbedConfig& config, std::uint64_t seed) {
    if (config.dim < 2) throw DataError("init_params: embedding dimension must be >= 2");
    if (config.points < 8) throw DataError("init_params: point count must be >= 8");
    std::mt19937_64 rng(seed);
    EncoderParams p;
    p.config = config;
    p.f_net = init_net(config.dim, rng);
    p.g_net = init_net(config.dim, rng);
    p.t = Mat::Constant(1, 1, 0.1);
    return p;
}

ad::Var encode_on_tape(ad::Tape& tape, const std::vector<ad::Var>& net, ad::Var cloud) {
    ad::Var h = cloud;
    for (int l = 0; l < 3; ++l) {
        h = tape.relu(tape.add_rowvec(tape.matmul(h, net[2 * l]), net[2 * l + 1]));
    }
    ad::Var pooled = tape.colwise_max(h);
    ad::Var head = tape.relu(tape.add_rowvec(tape.matmul(pooled, net[6]), net[7]));
    ad::Var z = tape.add_rowvec(tape.matmul(head, net[8]), net[9]);
    ad::Var positive = tape.add_const(tape.softplus(z), 1e-8);
    ad::Var norm = tape.sqrt_scalar(tape.sum(tape.square(positive)));
    return tape.div_scalar(positive, norm);
}

DualEmbedding embed(const EncoderParams& params, const Mat& cloud) {
    if (cloud.cols() != 3)
        throw DataError("embed: cloud must be n x 3");
    if (cloud.rows() != params.config.points)
        throw DataError("embed: expected " + std::to_string(params.config.points) +
                        " points, got " + std::to_string(cloud.rows()));
    const Eigen::RowVector3d lo = cloud.colwise().minCoeff();
    const Eigen::RowVector3d hi = cloud.colwise().maxCoeff();
    if ((0.5 * (lo + hi)).cwiseAbs().maxCoeff() > 1e-6)
        throw DataError("embed: cloud is not centered (bbox center off origin)");

    ad::Tape tape;
    ad::Var c = tape.constant(cloud);
    std::vector<ad::Var> fv, gv;
    for (const Mat& m : params.f_net) fv.push_back(tape.constant(m));
    for (const Mat& m : params.g_net) gv.push_back(tape.constant(m));
    DualEmbedding e;
    e.f = tape.value(encode_on_tape(tape, fv, c)).row(0).transpose();
    e.g = tape.value(encode_on_tape(tape, gv, c)).row(0).transpose();
    return e;
}

std::vector<DualEmbedding> embed_batch(const EncoderParams& params, const std::vector<Mat>& clouds,
                                       int threads) {
    std::vector<DualEmbedding> out(clouds.size());
    std::vector<std::string> errors(clouds.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out[i] = embed(params, clouds[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (threads <= 1 || clouds.size() < 2) {
        work(0, clouds.size());
    } else {
        const std::size_t n = clouds.size();
        const std::size_t workers = std::min<std::size_t>(threads, n);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            pool.emplace_back(work, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty())
            throw DataError("embed_batch: item " + std::to_string(i) + ": " + errors[i]);
    }
    return out;
}

void EncoderParams::save(const std::string& path_prefix) const {
    TensorStore store;
    const char* names[] = {"W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4", "W5", "b5"};
    for (std::size_t i = 0; i < f_net.size(); ++i) store.tensors["f." + std::string(names[i])] = f_net[i];
    for (std::size_t i = 0; i < g_net.size(); ++i) store.tensors["g." + std::string(names[i])] = g_net[i];
    store.tensors["t"] = t;
    store.save(path_prefix + ".fset");

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["dim"] = config.dim;
    manifest["points"] = config.points;
    manifest["init_seed"] = config.init_seed;
    std::ofstream(path_prefix + ".json") << manifest.dump(2) << "\n";
}

EncoderParams EncoderParams::load(const std::string& path_prefix) {
    std::ifstream mis(path_prefix + ".json");
    if (!mis) throw DataError("checkpoint manifest not found: " + path_prefix + ".json");
    nlohmann::json manifest = nlohmann::json::parse(mis);

    EmbedConfig cfg;
    cfg.dim = manifest.at("dim").get<int>();
    cfg.points = manifest.at("points").get<int>();
    cfg.init_seed = manifest.at("init_seed").get<std::uint64_t>();
    if (cfg.dim < 2 || cfg.points < 8)
        throw DataError("checkpoint manifest: invalid dim/points");

    TensorStore store = TensorStore::load(path_prefix + ".fset");
    EncoderParams p = init_params(cfg, cfg.init_seed);
    const char* names[] = {"W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4", "W5", "b5"};
    for (std::size_t i = 0; i < p.f_net.size(); ++i) {
        p.f_net[i] = store.tensors.at("f." + std::string(names[i]));
        p.g_net[i] = store.tensors.at("g." + std::string(names[i]));
    }
    p.t = store.tensors.at("t");
    if (p.f_net.back().cols() != cfg.dim)
        throw DataError("checkpoint: tensor shapes disagree with manifest dim");
    return p;
}

}  // namespace fse
