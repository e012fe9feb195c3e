#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fse/autodiff.hpp"
#include "fse/fuzzy.hpp"
#include "fse/tensor_store.hpp"

namespace fse {

struct EmbedConfig {
    int dim = 16;        // embedding dimension D
    int points = 1024;   // points per cloud
    std::uint64_t init_seed = 0;
};

/// Weights of the two point-set encoder networks. f_net and g_net are
/// disjoint parameter sets; within each net the weights are shared across
/// the two Siamese inputs. The learnable threshold t is stored even when the
/// ranking loss leaves it untouched.
///
/// Per net: shared per-point transform 3->64->128->128 (rectifier), max pool
/// over points, head 128->128->D, then softplus + 1e-8 + l2 normalization.
struct EncoderParams {
    EmbedConfig config;
    std::vector<Mat> f_net;  // W1,b1,W2,b2,W3,b3,W4,b4,W5,b5
    std::vector<Mat> g_net;
    Mat t;  // 1x1 learnable threshold

    /// Flat parameter list in a fixed order: f_net, g_net, t.
    std::vector<Mat> flatten() const;
    void unflatten(const std::vector<Mat>& flat);

    void save(const std::string& path_prefix) const;  // writes .fset + .json
    static EncoderParams load(const std::string& path_prefix);
};

/// Fan-in-scaled uniform weights, zero biases, t = 0.1. Deterministic per seed.
EncoderParams init_params(const EmbedConfig& config, std::uint64_t seed);

/// Builds one net's forward pass on a tape; returns the unit-norm embedding
/// node (1 x D row). `net` holds Vars for the ten net tensors in flatten()
/// order, `cloud` a (points x 3) node.
ad::Var encode_on_tape(ad::Tape& tape, const std::vector<ad::Var>& net, ad::Var cloud);

/// Embeds one centered cloud through both nets. Checks point count and that
/// the cloud's bounding-box center sits at the origin (within 1e-6).
DualEmbedding embed(const EncoderParams& params, const Mat& cloud);

/// Elementwise embed in deterministic order; `threads` > 1 splits items
/// across workers (output order unchanged).
std::vector<DualEmbedding> embed_batch(const EncoderParams& params, const std::vector<Mat>& clouds,
                                       int threads = 1);

}  // namespace fse
