#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fse/dataset.hpp"
#include "fse/encoder.hpp"
#include "fse/errors.hpp"
#include "fse/retrieval.hpp"
#include "fse/run_config.hpp"
#include "fse/selfcheck.hpp"
#include "fse/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config_file;
    std::string seed_override;
    std::string out_override;
    bool force = false;
    std::string threads_override;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "key=value configuration file");
    cmd->add_option("--seed", flags.seed_override, "seed override");
    cmd->add_option("--out", flags.out_override, "output directory override");
    cmd->add_flag("--force", flags.force, "overwrite non-empty output directory");
    cmd->add_option("--threads", flags.threads_override, "worker threads for batch embedding");
}

fse::RunConfig resolve_config(const CommonFlags& flags,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    fse::RunConfig cfg;
    if (!flags.config_file.empty()) cfg.load_file(flags.config_file);
    if (!flags.seed_override.empty()) cfg.set("seed", flags.seed_override);
    if (!flags.out_override.empty()) cfg.set("out_dir", flags.out_override);
    if (!flags.threads_override.empty()) cfg.set("threads", flags.threads_override);
    for (const auto& [k, v] : overrides)
        if (!v.empty()) cfg.set(k, v);
    return cfg;
}

void prepare_out_dir(const std::string& dir, bool force) {
    if (dir.empty()) throw fse::UsageError("output directory required (--out or out_dir=...)");
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!force)
            throw fse::DataError("output directory not empty (use --force): " + dir);
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

fse::EmbedConfig embed_config_from(const fse::RunConfig& cfg) {
    fse::EmbedConfig e;
    e.dim = cfg.get_int("dim");
    e.points = cfg.get_int("points");
    e.init_seed = cfg.get_u64("seed");
    return e;
}

int cmd_gen(const CommonFlags& flags,
            const std::vector<std::pair<std::string, std::string>>& overrides) {
    fse::RunConfig cfg = resolve_config(flags, overrides);
    const std::string out = cfg.get_str("out_dir");
    prepare_out_dir(out, flags.force);

    fse::GenConfig gen;
    gen.category = cfg.get_str("category");
    gen.count = cfg.get_int("objects");
    gen.seed = cfg.get_u64("seed");
    gen.tau = cfg.get_double("tau");
    if (gen.count <= 0) throw fse::UsageError("objects must be > 0");

    fse::Dataset ds = fse::generate_synthetic_dataset(gen);
    fse::save_dataset(ds, out);
    cfg.save((fs::path(out) / "run_config.txt").string());

    std::cout << "generated " << ds.objects.size() << " " << ds.category << " objects ("
              << ds.train_objects().size() << " train / " << ds.test_objects().size()
              << " test) in " << out << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags,
              const std::vector<std::pair<std::string, std::string>>& overrides,
              const std::string& resume_prefix) {
    fse::RunConfig cfg = resolve_config(flags, overrides);
    const std::string dataset_dir = cfg.get_str("dataset_dir");
    if (dataset_dir.empty()) throw fse::UsageError("dataset_dir required");
    const std::string out = cfg.get_str("out_dir");
    prepare_out_dir(out, flags.force);

    fse::Dataset ds = fse::load_dataset(dataset_dir);
    fse::EmbedConfig embed_cfg = embed_config_from(cfg);

    fse::TrainConfig tc;
    tc.mode = fse::parse_loss_mode(cfg.get_str("mode"));
    tc.alpha = cfg.get_double("alpha");
    tc.epochs = cfg.get_int("epochs");
    tc.batch = cfg.get_int("batch");
    tc.batches_per_epoch = cfg.get_int("batches_per_epoch");
    tc.seed = cfg.get_u64("seed");
    tc.adam.lr = cfg.get_double("lr");
    tc.adam.decay_rate = cfg.get_double("lr_decay");
    tc.adam.decay_steps = cfg.get_int("lr_decay_steps");
    tc.adam.beta1 = cfg.get_double("beta1");
    tc.adam.beta2 = cfg.get_double("beta2");
    tc.adam.eps = cfg.get_double("eps");
    tc.checkpoint_every = cfg.get_int("checkpoint_every");
    tc.checkpoint_prefix = (fs::path(out) / "ckpt").string();
    tc.eval_every = cfg.get_int("eval_every");
    const int threads = cfg.get_int("threads");
    if (tc.eval_every > 0) {
        tc.validator = [&ds, threads](const fse::EncoderParams& p) {
            auto index = fse::build_index(ds, p, 4096, threads);
            return fse::evaluate_complements(ds, index).recall_at_10;
        };
    }

    fse::EncoderParams resume_params;
    fse::AdamState resume_state;
    bool resuming = false;
    if (!resume_prefix.empty()) {
        resume_params = fse::EncoderParams::load(resume_prefix);
        resuming = true;
        const std::string opt_path = resume_prefix + ".opt.fset";
        if (fs::exists(opt_path)) {
            fse::TensorStore opt = fse::TensorStore::load(opt_path);
            auto flat = resume_params.flatten();
            resume_state = fse::AdamState::init(flat);
            resume_state.step = static_cast<std::int64_t>(opt.tensors.at("step")(0, 0));
            for (std::size_t i = 0; i < flat.size(); ++i) {
                resume_state.m[i] = opt.tensors.at("m." + std::to_string(i));
                resume_state.v[i] = opt.tensors.at("v." + std::to_string(i));
            }
        } else {
            resume_state = fse::AdamState::init(resume_params.flatten());
        }
    }

    std::ofstream metrics(fs::path(out) / "metrics.csv");
    fse::TrainResult result =
        fse::train(ds, embed_cfg, tc, &metrics, resuming ? &resume_params : nullptr,
                   resuming ? &resume_state : nullptr);

    const std::string ckpt = (fs::path(out) / "checkpoint").string();
    result.params.save(ckpt);
    {
        fse::TensorStore opt;
        opt.tensors["step"] = fse::Mat::Constant(1, 1, static_cast<double>(result.adam.step));
        for (std::size_t i = 0; i < result.adam.m.size(); ++i) {
            opt.tensors["m." + std::to_string(i)] = result.adam.m[i];
            opt.tensors["v." + std::to_string(i)] = result.adam.v[i];
        }
        opt.save(ckpt + ".opt.fset");
    }
    cfg.save((fs::path(out) / "run_config.txt").string());

    std::cout << "trained " << tc.epochs << " epochs; final mean loss "
              << (result.log.empty() ? 0.0 : result.log.back().mean_loss) << "; checkpoint "
              << ckpt << ".fset; optimizer step " << result.adam.step << "\n";
    return 0;
}

int cmd_retrieve(const CommonFlags& flags,
                 const std::vector<std::pair<std::string, std::string>>& overrides,
                 const std::string& object_id, const std::string& comps_csv,
                 const std::string& cloud_file, const std::string& mode) {
    fse::RunConfig cfg = resolve_config(flags, overrides);
    const std::string dataset_dir = cfg.get_str("dataset_dir");
    const std::string ckpt = cfg.get_str("checkpoint");
    if (dataset_dir.empty() || ckpt.empty())
        throw fse::UsageError("dataset_dir and checkpoint required");
    if (mode != "complement" && mode != "interchangeable")
        throw fse::UsageError("mode must be complement|interchangeable");
    const std::size_t k = static_cast<std::size_t>(cfg.get_int("k"));

    fse::Dataset ds = fse::load_dataset(dataset_dir);
    fse::EncoderParams params = fse::EncoderParams::load(ckpt);
    const int threads = cfg.get_int("threads");

    fse::Mat query_cloud;
    if (!cloud_file.empty()) {
        std::ifstream is(cloud_file);
        if (!is) throw fse::DataError("cloud file not found: " + cloud_file);
        std::vector<double> xs;
        double v;
        while (is >> v) xs.push_back(v);
        if (xs.empty() || xs.size() % 3 != 0)
            throw fse::DataError("cloud file must contain n*3 numbers");
        query_cloud.resize(static_cast<Eigen::Index>(xs.size() / 3), 3);
        for (Eigen::Index r = 0; r < query_cloud.rows(); ++r)
            for (int j = 0; j < 3; ++j) query_cloud(r, j) = xs[3 * r + j];
        if (query_cloud.rows() != params.config.points)
            throw fse::DataError("cloud file must contain exactly " +
                                 std::to_string(params.config.points) + " points");
        const Eigen::RowVector3d lo = query_cloud.colwise().minCoeff();
        const Eigen::RowVector3d hi = query_cloud.colwise().maxCoeff();
        query_cloud.rowwise() -= 0.5 * (lo + hi);
    } else {
        if (object_id.empty() || comps_csv.empty())
            throw fse::UsageError("provide --object and --comps, or --cloud");
        const fse::ObjectRecord* obj = nullptr;
        for (const auto& o : ds.objects)
            if (o.id == object_id) obj = &o;
        if (!obj) throw fse::DataError("unknown object id: " + object_id);
        std::vector<std::string> comps;
        std::stringstream ss(comps_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) comps.push_back(tok);
        std::sort(comps.begin(), comps.end());
        if (obj->graph.connected_pieces(comps).size() != 1)
            throw fse::DataError("query components are not a connected subgraph");
        query_cloud = fse::sample_point_cloud(obj->pick(comps), params.config.points,
                                              fse::derive_seed(ds.seed, 0x9e11));
    }

    auto index = fse::build_index(ds, params,
                                  static_cast<std::size_t>(cfg.get_int("max_partials")), threads);
    fse::DualEmbedding query = fse::embed(params, query_cloud);
    auto ranked = (mode == "complement")
                      ? fse::retrieve_complements(index, query, std::min(k, index.entries.size()))
                      : fse::retrieve_interchangeable(index, query,
                                                      std::min(k, index.entries.size()));

    std::ostringstream csv;
    csv << "rank,id,energy\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
        csv << (i + 1) << "," << ranked[i].id << "," << ranked[i].energy << "\n";
    std::cout << csv.str();
    if (!cfg.get_str("out_dir").empty()) {
        fs::create_directories(cfg.get_str("out_dir"));
        std::ofstream(fs::path(cfg.get_str("out_dir")) / "retrieval.csv") << csv.str();
        cfg.save((fs::path(cfg.get_str("out_dir")) / "run_config.txt").string());
    }
    return 0;
}

int cmd_eval(const CommonFlags& flags,
             const std::vector<std::pair<std::string, std::string>>& overrides) {
    fse::RunConfig cfg = resolve_config(flags, overrides);
    const std::string dataset_dir = cfg.get_str("dataset_dir");
    const std::string ckpt = cfg.get_str("checkpoint");
    if (dataset_dir.empty() || ckpt.empty())
        throw fse::UsageError("dataset_dir and checkpoint required");
    const std::string out = cfg.get_str("out_dir");
    prepare_out_dir(out, flags.force);

    fse::Dataset ds = fse::load_dataset(dataset_dir);
    if (ds.test_objects().empty()) throw fse::DataError("dataset has an empty test split");
    fse::EncoderParams params = fse::EncoderParams::load(ckpt);
    const int threads = cfg.get_int("threads");
    const auto cap = static_cast<std::size_t>(cfg.get_int("max_partials"));

    auto index = fse::build_index(ds, params, cap, threads);
    fse::ComplementMetrics m = fse::evaluate_complements(ds, index);

    auto part_index = fse::build_single_part_index(ds, params, threads);
    std::vector<std::size_t> queries(part_index.entries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) queries[i] = i;
    const std::size_t k_max =
        std::max<std::size_t>(1, part_index.entries.size() / 10);
    auto curve = fse::label_agreement_curve(part_index, queries, k_max);

    std::ofstream mcsv(fs::path(out) / "metrics.csv");
    mcsv << "metric,value\n";
    mcsv << "recall_at_1," << m.recall_at_1 << "\n";
    mcsv << "recall_at_10," << m.recall_at_10 << "\n";
    mcsv << "median_percentile_rank," << m.median_percentile_rank << "\n";
    mcsv << "mean_percentile_rank," << m.mean_percentile_rank << "\n";
    mcsv << "num_queries," << m.num_queries << "\n";
    mcsv << "num_candidates," << m.num_candidates << "\n";
    mcsv << "partial_cap," << index.partial_cap << "\n";

    json summary;
    summary["recall_at_1"] = m.recall_at_1;
    summary["recall_at_10"] = m.recall_at_10;
    summary["median_percentile_rank"] = m.median_percentile_rank;
    summary["mean_percentile_rank"] = m.mean_percentile_rank;
    summary["num_queries"] = m.num_queries;
    summary["num_candidates"] = m.num_candidates;
    summary["partial_cap"] = index.partial_cap;
    std::ofstream(fs::path(out) / "summary.json") << summary.dump(2) << "\n";

    std::ofstream ccsv(fs::path(out) / "label_agreement.csv");
    ccsv << "k,ratio\n";
    for (std::size_t k = 1; k <= curve.size(); ++k) ccsv << k << "," << curve[k - 1] << "\n";

    cfg.save((fs::path(out) / "run_config.txt").string());
    std::cout << "recall@1 " << m.recall_at_1 << ", recall@10 " << m.recall_at_10
              << ", median PR " << m.median_percentile_rank << ", mean PR "
              << m.mean_percentile_rank << " over " << m.num_queries << " queries / "
              << m.num_candidates << " candidates\n";
    return 0;
}

int cmd_check(const CommonFlags& flags,
              const std::vector<std::pair<std::string, std::string>>& overrides) {
    fse::RunConfig cfg = resolve_config(flags, overrides);
    const std::uint64_t seed = cfg.get_u64("seed");

    fse::CheckOutcome props = fse::run_property_sweep(100000, seed);
    std::cout << props.report;
    fse::CheckOutcome grads = fse::run_gradient_checks(8, seed + 1);
    std::cout << grads.report;

    if (!props.passed || !grads.passed) {
        std::cout << "CHECK FAILED\n";
        throw fse::NumericalError("self-check failed");
    }
    std::cout << "all checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuzzy-set dual embeddings for partial shapes"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, retrieve_flags, eval_flags, check_flags;
    std::string gen_category, gen_objects;
    std::string train_dataset, train_mode, train_epochs, train_batch, train_dim, train_points,
        train_lr, train_resume, train_eval_every;
    std::string ret_dataset, ret_ckpt, ret_object, ret_comps, ret_cloud, ret_k;
    std::string ret_mode = "complement";
    std::string eval_dataset, eval_ckpt;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen, gen_flags);
    gen->add_option("--category", gen_category, "table|chair|lamp");
    gen->add_option("-n,--objects", gen_objects, "object count");

    CLI::App* train = app.add_subcommand("train", "train the dual encoder");
    add_common(train, train_flags);
    train->add_option("--dataset", train_dataset, "dataset directory");
    train->add_option("--mode", train_mode, "ranking|threshold");
    train->add_option("--epochs", train_epochs);
    train->add_option("--batch", train_batch);
    train->add_option("--dim", train_dim);
    train->add_option("--points", train_points);
    train->add_option("--lr", train_lr);
    train->add_option("--eval-every", train_eval_every);
    train->add_option("--resume", train_resume, "checkpoint prefix to resume from");

    CLI::App* retrieve = app.add_subcommand("retrieve", "rank database candidates for a query");
    add_common(retrieve, retrieve_flags);
    retrieve->add_option("--dataset", ret_dataset, "dataset directory");
    retrieve->add_option("--checkpoint", ret_ckpt, "checkpoint prefix");
    retrieve->add_option("--object", ret_object, "query object id");
    retrieve->add_option("--comps", ret_comps, "comma-separated component ids");
    retrieve->add_option("--cloud", ret_cloud, "query cloud file (n x 3 numbers)");
    retrieve->add_option("--mode", ret_mode, "complement|interchangeable");
    retrieve->add_option("-k", ret_k, "results to return");

    CLI::App* eval = app.add_subcommand("eval", "complement metrics and label-agreement curve");
    add_common(eval, eval_flags);
    eval->add_option("--dataset", eval_dataset, "dataset directory");
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint prefix");

    CLI::App* check = app.add_subcommand("check", "property sweep and gradient checks");
    add_common(check, check_flags);

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_gen(gen_flags, {{"category", gen_category}, {"objects", gen_objects}});
        if (train->parsed())
            return cmd_train(train_flags,
                             {{"dataset_dir", train_dataset},
                              {"mode", train_mode},
                              {"epochs", train_epochs},
                              {"batch", train_batch},
                              {"dim", train_dim},
                              {"points", train_points},
                              {"lr", train_lr},
                              {"eval_every", train_eval_every}},
                             train_resume);
        if (retrieve->parsed())
            return cmd_retrieve(retrieve_flags,
                                {{"dataset_dir", ret_dataset},
                                 {"checkpoint", ret_ckpt},
                                 {"k", ret_k}},
                                ret_object, ret_comps, ret_cloud, ret_mode);
        if (eval->parsed())
            return cmd_eval(eval_flags,
                            {{"dataset_dir", eval_dataset}, {"checkpoint", eval_ckpt}});
        if (check->parsed()) return cmd_check(check_flags, {});
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const fse::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const fse::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const fse::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
