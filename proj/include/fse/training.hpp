#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "fse/adam.hpp"
#include "fse/dataset.hpp"
#include "fse/encoder.hpp"

namespace fse {

enum class LossMode { Ranking, Threshold };

LossMode parse_loss_mode(const std::string& s);

/// One complementary pair: both sides of a random split, sampled and centered.
struct PairSample {
    std::string object_id;
    std::vector<std::string> query_ids;
    std::vector<std::string> complement_ids;
    Mat query_cloud;       // points x 3
    Mat complement_cloud;  // points x 3
};

/// N training objects sampled with replacement, each freshly re-split.
/// Single-component objects are skipped (reported via `warnings`).
/// Deterministic per epoch_seed.
std::vector<PairSample> build_batch(const Dataset& dataset, const EmbedConfig& config,
                                    std::uint64_t epoch_seed, int n,
                                    std::vector<std::string>* warnings = nullptr);

struct TrainConfig {
    LossMode mode = LossMode::Ranking;
    double alpha = 0.05;
    int epochs = 200;
    int batch = 8;
    int batches_per_epoch = 0;  // 0 = ceil(train objects / batch)
    AdamConfig adam;
    std::uint64_t seed = 0;
    int eval_every = 0;        // 0 disables the validator
    int checkpoint_every = 0;  // 0 disables periodic checkpoints
    std::string checkpoint_prefix;
    /// Optional held-out metric, logged in the recall10 column.
    std::function<double(const EncoderParams&)> validator;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    double recall10 = -1.0;  // -1 when not evaluated
};

struct TrainResult {
    EncoderParams params;
    AdamState adam;
    std::vector<EpochLog> log;
};

/// Full training loop: per batch, embed both sides on one tape, form the
/// N x N complementarity energy matrix, apply the configured loss and one
/// Adam step. Single-threaded and bit-deterministic per seed. `metrics_csv`,
/// when non-null, receives append-only CSV rows (header included).
TrainResult train(const Dataset& dataset, const EmbedConfig& embed_config,
                  const TrainConfig& config, std::ostream* metrics_csv = nullptr,
                  const EncoderParams* resume = nullptr, const AdamState* resume_state = nullptr);

}  // namespace fse
