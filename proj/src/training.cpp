#include "fse/training.hpp"

#include <cmath>
#include <random>

#include "fse/errors.hpp"
#include "fse/losses.hpp"

namespace fse {

LossMode parse_loss_mode(const std::string& s) {
    if (s == "ranking") return LossMode::Ranking;
    if (s == "threshold") return LossMode::Threshold;
    throw UsageError("unknown loss mode '" + s + "' (expected ranking|threshold)");
}

std::vector<PairSample> build_batch(const Dataset& dataset, const EmbedConfig& config,
                                    std::uint64_t epoch_seed, int n,
                                    std::vector<std::string>* warnings) {
    auto train = dataset.train_objects();
    if (train.empty()) throw DataError("build_batch: dataset has no training objects");

    std::vector<const ObjectRecord*> usable;
    for (const ObjectRecord* o : train) {
        if (o->graph.nodes.size() >= 2) {
            usable.push_back(o);
        } else if (warnings) {
            warnings->push_back("object " + o->id + " has a single component; skipped");
        }
    }
    if (usable.empty())
        throw DataError("build_batch: no training object has >= 2 components");

    std::mt19937_64 rng(epoch_seed);
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    std::vector<PairSample> batch;
    batch.reserve(n);
    for (int i = 0; i < n; ++i) {
        const ObjectRecord* obj = usable[pick(rng)];
        const std::uint64_t split_seed = rng();
        SplitPair split = split_random(obj->graph, split_seed);

        PairSample s;
        s.object_id = obj->id;
        s.query_ids = split.query;
        s.complement_ids = split.complement;
        s.query_cloud = sample_point_cloud(obj->pick(split.query), config.points, rng());
        s.complement_cloud =
            sample_point_cloud(obj->pick(split.complement), config.points, rng());
        batch.push_back(std::move(s));
    }
    return batch;
}

namespace {

struct StepResult {
    double loss = 0.0;
};

StepResult train_step(EncoderParams& params, AdamState& adam_state, const TrainConfig& config,
                      const std::vector<PairSample>& batch) {
    const std::size_t n = batch.size();
    std::vector<Mat> flat = params.flatten();

    ad::Tape tape;
    std::vector<ad::Var> leaves;
    leaves.reserve(flat.size());
    for (const Mat& m : flat) leaves.push_back(tape.leaf(m));
    const std::size_t half = params.f_net.size();
    std::vector<ad::Var> f_net(leaves.begin(), leaves.begin() + half);
    std::vector<ad::Var> g_net(leaves.begin() + half, leaves.begin() + 2 * half);
    ad::Var t_leaf = leaves.back();

    std::vector<ad::Var> fx(n), gx(n), fy(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
        ad::Var q = tape.constant(batch[i].query_cloud);
        ad::Var c = tape.constant(batch[i].complement_cloud);
        fx[i] = encode_on_tape(tape, f_net, q);
        gx[i] = encode_on_tape(tape, g_net, q);
        fy[i] = encode_on_tape(tape, f_net, c);
        gy[i] = encode_on_tape(tape, g_net, c);
    }

    std::vector<std::vector<ad::Var>> energies(n, std::vector<ad::Var>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            energies[i][j] = tape.add(directional_energy_on_tape(tape, fx[i], gy[j]),
                                      directional_energy_on_tape(tape, fy[j], gx[i]));
        }
    }

    ad::Var loss = (config.mode == LossMode::Ranking)
                       ? ranking_loss_on_tape(tape, energies, config.alpha)
                       : threshold_loss_on_tape(tape, energies, config.alpha, t_leaf);
    const double loss_value = tape.value_scalar(loss);
    tape.backward(loss);

    std::vector<Mat> grads;
    grads.reserve(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const Mat& g = tape.grad(leaves[i]);
        grads.push_back(g.size() ? g : Mat::Zero(flat[i].rows(), flat[i].cols()));
    }

    adam_step(adam_state, flat, grads, config.adam);
    params.unflatten(flat);
    return {loss_value};
}

}  // namespace

TrainResult train(const Dataset& dataset, const EmbedConfig& embed_config,
                  const TrainConfig& config, std::ostream* metrics_csv,
                  const EncoderParams* resume, const AdamState* resume_state) {
    if (dataset.train_objects().empty())
        throw DataError("train: dataset has no training objects");

    TrainResult result;
    result.params = resume ? *resume : init_params(embed_config, embed_config.init_seed);
    result.adam =
        resume_state ? *resume_state : AdamState::init(result.params.flatten());

    const int batches_per_epoch =
        config.batches_per_epoch > 0
            ? config.batches_per_epoch
            : std::max<int>(1, static_cast<int>((dataset.train_objects().size() +
                                                 config.batch - 1) /
                                                config.batch));

    if (metrics_csv) *metrics_csv << "epoch,mean_loss,lr,recall10\n";

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (int b = 0; b < batches_per_epoch; ++b) {
            const std::uint64_t batch_seed =
                derive_seed(config.seed, static_cast<std::uint64_t>(epoch) * 1024 + b);
            auto batch = build_batch(dataset, embed_config, batch_seed, config.batch);
            StepResult step;
            try {
                step = train_step(result.params, result.adam, config, batch);
            } catch (const NumericalError& e) {
                double pnorm = 0.0;
                for (const Mat& m : result.params.flatten()) pnorm += m.squaredNorm();
                throw NumericalError("train: aborted at epoch " + std::to_string(epoch) +
                                     ", batch seed " + std::to_string(batch_seed) +
                                     ", parameter norm " + std::to_string(std::sqrt(pnorm)) +
                                     ": " + e.what());
            }
            loss_sum += step.loss;
        }

        EpochLog log;
        log.epoch = epoch;
        log.mean_loss = loss_sum / batches_per_epoch;
        log.lr = effective_lr(config.adam, result.adam.step);
        if (config.eval_every > 0 && config.validator &&
            (epoch % config.eval_every == 0 || epoch == config.epochs)) {
            log.recall10 = config.validator(result.params);
        }
        result.log.push_back(log);

        if (metrics_csv) {
            *metrics_csv << log.epoch << "," << log.mean_loss << "," << log.lr << ",";
            if (log.recall10 >= 0) *metrics_csv << log.recall10;
            *metrics_csv << "\n";
        }
        if (config.checkpoint_every > 0 && !config.checkpoint_prefix.empty() &&
            epoch % config.checkpoint_every == 0) {
            result.params.save(config.checkpoint_prefix + "_epoch" + std::to_string(epoch));
        }
    }
    return result;
}

}  // namespace fse
