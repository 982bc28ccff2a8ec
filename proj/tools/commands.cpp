#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "mlsgan/action_code.hpp"
#include "mlsgan/checkpoint.hpp"
#include "mlsgan/grad_check.hpp"
#include "mlsgan/ops.hpp"

namespace mlsgan::cli {

namespace {

namespace fs = std::filesystem;

RunConfig load_config_or_throw(const std::string& path, const CliOverrides& overrides) {
    RunConfig cfg = load_run_config(path);
    apply_overrides(cfg, overrides);
    return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw IoError("write to '" + path + "' failed");
}

/// Maps the library's error taxonomy onto process exit codes.
int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingError& e) {
        err << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

Checkpoint make_checkpoint(const ModelAssembly& model, std::uint64_t seed, int next_epoch) {
    Checkpoint ckpt;
    ckpt.meta["variant"] = to_string(model.variant);
    ckpt.meta["epoch"] = std::to_string(next_epoch);
    ckpt.meta["seed"] = std::to_string(seed);
    ckpt.meta["n_agents"] = std::to_string(model.cfg.n_agents);
    ckpt.meta["time_steps"] = std::to_string(model.cfg.time_steps);
    ckpt.meta["feature_dim"] = std::to_string(model.cfg.feature_dim);
    ckpt.meta["classes"] = std::to_string(model.cfg.classes);
    ckpt.meta["hidden"] = std::to_string(model.cfg.hidden);
    ckpt.meta["z_dim"] = std::to_string(model.cfg.z_dim);
    ckpt.meta["fused"] = std::to_string(model.cfg.fused);
    for (const Tensor& p : model.parameters()) ckpt.params.emplace_back(p.name(), p);
    return ckpt;
}

int meta_int(const Checkpoint& ckpt, const std::string& key) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) throw FormatError("checkpoint missing meta key '" + key + "'");
    return std::stoi(it->second);
}

/// Rebuilds the assembly a checkpoint describes and loads its weights.
ModelAssembly restore_model(const Checkpoint& ckpt) {
    ModelConfig cfg;
    cfg.n_agents = meta_int(ckpt, "n_agents");
    cfg.time_steps = meta_int(ckpt, "time_steps");
    cfg.feature_dim = meta_int(ckpt, "feature_dim");
    cfg.classes = meta_int(ckpt, "classes");
    cfg.hidden = meta_int(ckpt, "hidden");
    cfg.z_dim = meta_int(ckpt, "z_dim");
    cfg.fused = meta_int(ckpt, "fused");
    auto it = ckpt.meta.find("variant");
    if (it == ckpt.meta.end()) throw FormatError("checkpoint missing meta key 'variant'");
    Rng rng(0);  // weights are overwritten below
    ModelAssembly model = build_variant(variant_from_string(it->second), cfg, rng);
    apply_checkpoint(ckpt, model.parameters());
    return model;
}

Dataset load_dataset_checked(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) {
        throw ConfigError("paths.dataset is required for this command");
    }
    return load_dataset(cfg.dataset_path);
}

}  // namespace

int cmd_gen_data(const GenDataArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        RunConfig cfg = load_config_or_throw(args.config_path, args.overrides);
        // For gen-data, --out names the dataset file itself.
        std::string out_path = args.out_path;
        if (out_path.empty() && args.overrides.out) out_path = *args.overrides.out;
        if (out_path.empty()) out_path = cfg.dataset_path;
        if (out_path.empty()) {
            throw ConfigError("no output path: pass --out or set paths.dataset");
        }
        Dataset ds = generate_synthetic(cfg.synthetic);
        save_dataset(ds, out_path, args.text);
        out << "wrote " << ds.samples.size() << " samples to " << out_path << "\n";
        out << "class histogram:";
        for (long long count : ds.class_histogram()) out << " " << count;
        out << "\n";
        return kExitOk;
    });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        RunConfig cfg = load_config_or_throw(args.config_path, args.overrides);
        Dataset ds = load_dataset_checked(cfg);
        auto [train_set, test_set] = split(ds, cfg.train_fraction, cfg.split_seed());

        ModelAssembly model = [&] {
            if (!cfg.checkpoint_path.empty() && fs::exists(cfg.checkpoint_path)) {
                Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
                out << "resuming from " << cfg.checkpoint_path << " at epoch "
                    << meta_int(ckpt, "epoch") << "\n";
                ModelAssembly restored = restore_model(ckpt);
                cfg.train.start_epoch = meta_int(ckpt, "epoch");
                cfg.train.variant = restored.variant;
                return restored;
            }
            Rng init_rng(cfg.init_seed());
            return build_variant(cfg.train.variant, cfg.model_for(ds), init_rng);
        }();

        if (args.inject_nan) cfg.train.debug_inject_nan_at_step = 0;
        out << "variant " << to_string(model.variant) << ", train " << train_set.samples.size()
            << " / test " << test_set.samples.size() << " (split "
            << dataset_fingerprint(train_set) << ")\n";

        // MLSGAN_VERBOSE is the only environment variable the tool reads;
        // it adds per-epoch progress lines on stderr.
        const char* verbose = std::getenv("MLSGAN_VERBOSE");
        if (verbose != nullptr && std::string(verbose) != "0") {
            cfg.train.on_epoch = [&err](const EpochRow& row) {
                err << "epoch " << row.epoch << " d_loss " << row.d_loss << " g_loss "
                    << row.g_loss << " mca " << row.mca << " mpca " << row.mpca << "\n";
            };
        }

        TrainSummary summary = train(model, cfg.train, train_set, test_set);

        fs::create_directories(cfg.out_dir);
        const std::string ckpt_path = (fs::path(cfg.out_dir) / "checkpoint.ckpt").string();
        const int next_epoch = cfg.train.start_epoch + summary.epochs_run;
        save_checkpoint(make_checkpoint(model, cfg.seed, next_epoch), ckpt_path);
        write_text_file((fs::path(cfg.out_dir) / "metrics.csv").string(),
                        history_csv(summary.report.history));
        write_text_file((fs::path(cfg.out_dir) / "report.txt").string(),
                        render_report(summary.report));
        out << "epochs " << summary.epochs_run << ", final mca " << summary.report.mca
            << ", mpca " << summary.report.mpca << "\n";
        out << "wrote " << ckpt_path << "\n";
        return kExitOk;
    });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        RunConfig cfg = load_config_or_throw(args.config_path, args.overrides);
        if (cfg.checkpoint_path.empty()) {
            throw ConfigError("eval needs --checkpoint or paths.checkpoint");
        }
        Dataset ds = load_dataset_checked(cfg);
        auto [train_set, test_set] = split(ds, cfg.train_fraction, cfg.split_seed());
        ModelAssembly model = restore_model(load_checkpoint(cfg.checkpoint_path));
        MetricsReport report =
            evaluate(model, test_set, cfg.train.infer_z_samples, cfg.train.seed);
        out << render_report(report);
        return kExitOk;
    });
}

int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        RunConfig cfg = load_config_or_throw(args.config_path, args.overrides);
        Dataset ds = load_dataset_checked(cfg);
        auto [train_set, test_set] = split(ds, cfg.train_fraction, cfg.split_seed());
        const std::uint64_t split_mark = dataset_fingerprint(train_set);

        std::string csv = "variant,mca,mpca,status\n";
        for (Variant v : all_variants()) {
            // Identical data, split, and seeds for every variant.
            out << "variant " << to_string(v) << " (split " << split_mark << ")\n";
            TrainConfig tc = cfg.train;
            tc.variant = v;
            try {
                Rng init_rng(cfg.init_seed());
                ModelAssembly model = build_variant(v, cfg.model_for(ds), init_rng);
                TrainSummary summary = train(model, tc, train_set, test_set);
                char row[160];
                std::snprintf(row, sizeof row, "%s,%.6f,%.6f,ok\n", to_string(v).c_str(),
                              summary.report.mca, summary.report.mpca);
                csv += row;
                out << "  mca " << summary.report.mca << " mpca " << summary.report.mpca << "\n";
            } catch (const Error& e) {
                // One variant's failure must not abort the sweep.
                csv += to_string(v) + ",nan,nan,failed\n";
                err << "variant " << to_string(v) << " failed: " << e.what() << "\n";
            }
        }
        fs::create_directories(cfg.out_dir);
        const std::string csv_path = (fs::path(cfg.out_dir) / "ablation.csv").string();
        write_text_file(csv_path, csv);
        out << "wrote " << csv_path << "\n";
        return kExitOk;
    });
}

int cmd_probe(const ProbeArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        RunConfig cfg = load_config_or_throw(args.config_path, args.overrides);
        if (cfg.checkpoint_path.empty()) {
            throw ConfigError("probe needs --checkpoint or paths.checkpoint");
        }
        Dataset ds = load_dataset_checked(cfg);
        auto [train_set, test_set] = split(ds, cfg.train_fraction, cfg.split_seed());
        ModelAssembly model = restore_model(load_checkpoint(cfg.checkpoint_path));
        ProbeConfig pc;
        pc.seed = cfg.probe_seed();
        MetricsReport report = probe_codes(model, train_set, test_set, pc);
        out << "probe on frozen " << to_string(model.variant) << " codes:\n";
        out << render_report(report);
        fs::create_directories(cfg.out_dir);
        write_text_file((fs::path(cfg.out_dir) / "probe_report.txt").string(),
                        render_report(report));
        return kExitOk;
    });
}

int cmd_grad_check(const GradCheckArgs& args, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        if (!args.self_test_corrupt.empty() && args.self_test_corrupt != "gated_fusion") {
            throw ConfigError("--self-test-corrupt supports only 'gated_fusion'");
        }
        testing::gfu_corrupt_backward(args.self_test_corrupt == "gated_fusion");
        Rng rng(12345);
        struct Line {
            std::string component;
            double max_rel = 0.0;
            bool passed = false;
        };
        std::vector<Line> lines;
        auto check = [&](const std::string& component, const std::function<Tensor()>& f,
                         std::span<const Tensor> params) {
            GradCheckReport report = finite_diff_check(f, params);
            lines.push_back({component, report.max_rel_error, report.passed});
        };

        {
            DenseLayer layer = DenseLayer::init(5, 3, Activation::Tanh, rng, "dense");
            Tensor x = Tensor::zeros({2, 5}, true);
            for (double& v : x.data()) v = rng.normal();
            std::vector<Tensor> params = layer.parameters();
            params.push_back(x);
            check("dense", [&] { return sum(dense_forward(layer, x)); }, params);
        }
        {
            LSTMCell cell = LSTMCell::init(4, 3, rng, "lstm");
            Tensor x = Tensor::zeros({4}, true);
            Tensor h = Tensor::zeros({3}, true);
            Tensor c = Tensor::zeros({3}, true);
            for (Tensor t : {x, h, c}) {
                for (double& v : t.data()) v = 0.5 * rng.normal();
            }
            std::vector<Tensor> params = cell.parameters();
            params.insert(params.end(), {x, h, c});
            check("lstm_step",
                  [&] {
                      auto [h2, c2] = lstm_step(cell, x, h, c);
                      return sum(mul(h2, h2));
                  },
                  params);
        }
        {
            LSTMCell cell = LSTMCell::init(3, 3, rng, "lstm_seq");
            Tensor seq = Tensor::zeros({4, 3}, true);
            for (double& v : seq.data()) v = rng.normal();
            std::vector<Tensor> params = cell.parameters();
            params.push_back(seq);
            check("lstm_encode", [&] { return sum(lstm_encode(cell, seq)); }, params);
        }
        for (int m : {1, 2, 4}) {
            GatedFusionUnit unit =
                GatedFusionUnit::init(std::vector<int>(static_cast<std::size_t>(m), 3), 4, rng, "gfu");
            std::vector<Tensor> streams;
            for (int n = 0; n < m; ++n) {
                Tensor z = Tensor::zeros({3}, true);
                for (double& v : z.data()) v = rng.normal();
                streams.push_back(z);
            }
            std::vector<Tensor> params = unit.parameters();
            for (const Tensor& z : streams) params.push_back(z);
            check("gated_fusion(M=" + std::to_string(m) + ")",
                  [&] { return sum(gfu_forward(unit, streams)); }, params);
        }
        ModelConfig cfg;
        cfg.n_agents = 2;
        cfg.time_steps = 2;
        cfg.feature_dim = 3;
        cfg.classes = 3;
        cfg.hidden = 4;
        cfg.z_dim = 2;
        cfg.fused = 4;
        SceneSample sample;
        for (int n = 0; n < cfg.n_agents; ++n) {
            Tensor seq = Tensor::zeros({cfg.time_steps, cfg.feature_dim});
            for (double& v : seq.data()) v = rng.normal();
            sample.person_seqs.push_back(seq);
            sample.presence_mask.push_back(true);
        }
        {
            Tensor scene = Tensor::zeros({cfg.time_steps, cfg.feature_dim});
            for (double& v : scene.data()) v = rng.normal();
            sample.scene_seq = scene;
        }
        {
            GeneratorParams gen = GeneratorParams::make(cfg, true, true, rng);
            Tensor z = Tensor::zeros({cfg.z_dim});
            for (double& v : z.data()) v = rng.normal();
            GeneratorInput input = make_generator_input(sample, z);
            std::vector<Tensor> params = gen.parameters();
            check("generator", [&] { return sum(generator_forward(gen, input)); }, params);
        }
        {
            DiscriminatorParams disc = DiscriminatorParams::make(cfg, rng);
            Tensor code = Tensor::zeros({cfg.classes});
            for (double& v : code.data()) v = rng.uniform();
            std::vector<Tensor> params = disc.parameters();
            const int labels[1] = {1};
            check("discriminator",
                  [&] {
                      DiscriminatorOut d = discriminator_forward(disc, sample.scene_seq, code);
                      return add(bce_loss(d.p_real, 1),
                                 categorical_ce_loss(d.class_probs, std::span<const int>(labels, 1)));
                  },
                  params);
        }
        {
            Tensor logits = Tensor::zeros({2, 3}, true);
            for (double& v : logits.data()) v = rng.normal();
            const Tensor params[1] = {logits};
            const int labels[2] = {0, 2};
            check("losses",
                  [&] {
                      Tensor probs = softmax(logits);
                      return add(categorical_ce_loss(probs, std::span<const int>(labels, 2)),
                                 bce_loss(sigmoid(logits), 1));
                  },
                  params);
        }
        testing::gfu_corrupt_backward(false);

        bool all_passed = true;
        char buf[160];
        for (const Line& line : lines) {
            std::snprintf(buf, sizeof buf, "%-22s max_rel_error %.3e  %s\n", line.component.c_str(),
                          line.max_rel, line.passed ? "ok" : "FAIL");
            out << buf;
            all_passed = all_passed && line.passed;
        }
        if (!all_passed) {
            err << "gradient check failed; worst offenders above\n";
            return kExitCheckFailed;
        }
        out << "all " << lines.size() << " components passed\n";
        return kExitOk;
    });
}

}  // namespace mlsgan::cli
