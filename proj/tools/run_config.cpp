#include "run_config.hpp"

#include <fstream>

#include "json.hpp"
#include "mlsgan/error.hpp"
#include "mlsgan/rng.hpp"

namespace mlsgan::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    throw ConfigError("config field '" + path + "': " + why);
}

void expect_keys(const json& obj, const std::string& prefix,
                 std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("unknown config key '" + (prefix.empty() ? key : prefix + "." + key) +
                              "'");
        }
    }
}

template <typename T>
void read(const json& obj, const std::string& prefix, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad_field(prefix + "." + key, "wrong type");
    }
}

}  // namespace

std::uint64_t RunConfig::data_seed() const { return derive_seed(seed, "data"); }
std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, "split"); }
std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, "init"); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed, "train"); }
std::uint64_t RunConfig::probe_seed() const { return derive_seed(seed, "probe"); }

ModelConfig RunConfig::model_for(const Dataset& dataset) const {
    ModelConfig cfg = model;
    cfg.n_agents = dataset.n_slots;
    cfg.time_steps = dataset.time_steps;
    cfg.feature_dim = dataset.feature_dim;
    cfg.classes = dataset.k_group;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config '" + path + "'");
    }
    json root;
    try {
        root = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config '" + path + "' must be a JSON object");
    }
    expect_keys(root, "", {"seed", "synthetic", "model", "train", "paths"});

    RunConfig cfg;
    read(root, "", "seed", cfg.seed);

    if (root.contains("synthetic")) {
        const json& s = root.at("synthetic");
        expect_keys(s, "synthetic",
                    {"k_group", "k_ind", "n_slots", "time_steps", "feature_dim", "agents_min",
                     "agents_max", "noise_std", "class_separation", "transition_prob",
                     "scene_context", "class_weights", "labeling", "sample_count"});
        read(s, "synthetic", "k_group", cfg.synthetic.k_group);
        read(s, "synthetic", "k_ind", cfg.synthetic.k_ind);
        read(s, "synthetic", "n_slots", cfg.synthetic.n_slots);
        read(s, "synthetic", "time_steps", cfg.synthetic.time_steps);
        read(s, "synthetic", "feature_dim", cfg.synthetic.feature_dim);
        read(s, "synthetic", "agents_min", cfg.synthetic.agents_min);
        read(s, "synthetic", "agents_max", cfg.synthetic.agents_max);
        read(s, "synthetic", "noise_std", cfg.synthetic.noise_std);
        read(s, "synthetic", "class_separation", cfg.synthetic.class_separation);
        read(s, "synthetic", "transition_prob", cfg.synthetic.transition_prob);
        read(s, "synthetic", "scene_context", cfg.synthetic.scene_context);
        read(s, "synthetic", "class_weights", cfg.synthetic.class_weights);
        read(s, "synthetic", "sample_count", cfg.synthetic.sample_count);
        if (s.contains("labeling")) {
            std::string rule;
            read(s, "synthetic", "labeling", rule);
            try {
                cfg.synthetic.labeling = labeling_rule_from_string(rule);
            } catch (const ContractError& e) {
                bad_field("synthetic.labeling", e.what());
            }
        }
        try {
            cfg.synthetic.validate();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("synthetic config: ") + e.what());
        }
    }

    if (root.contains("model")) {
        const json& m = root.at("model");
        expect_keys(m, "model", {"hidden", "z_dim", "fused"});
        read(m, "model", "hidden", cfg.model.hidden);
        read(m, "model", "z_dim", cfg.model.z_dim);
        read(m, "model", "fused", cfg.model.fused);
        if (cfg.model.hidden < 1) bad_field("model.hidden", "must be >= 1");
        if (cfg.model.z_dim < 0) bad_field("model.z_dim", "must be >= 0");
        if (cfg.model.fused < 0) bad_field("model.fused", "must be >= 0");
    }

    if (root.contains("train")) {
        const json& t = root.at("train");
        expect_keys(t, "train",
                    {"epochs", "batch_size", "lambda_c", "lr", "lr_drop_epoch", "variant",
                     "eval_every", "non_saturating", "g_class_term", "infer_z_samples",
                     "stop_at_mca", "train_fraction"});
        read(t, "train", "epochs", cfg.train.epochs);
        read(t, "train", "batch_size", cfg.train.batch_size);
        read(t, "train", "lambda_c", cfg.train.lambda_c);
        read(t, "train", "lr", cfg.train.lr);
        read(t, "train", "lr_drop_epoch", cfg.train.lr_drop_epoch);
        read(t, "train", "eval_every", cfg.train.eval_every);
        read(t, "train", "non_saturating", cfg.train.non_saturating);
        read(t, "train", "g_class_term", cfg.train.g_class_term);
        read(t, "train", "infer_z_samples", cfg.train.infer_z_samples);
        read(t, "train", "stop_at_mca", cfg.train.stop_at_mca);
        read(t, "train", "train_fraction", cfg.train_fraction);
        if (t.contains("variant")) {
            std::string name;
            read(t, "train", "variant", name);
            try {
                cfg.train.variant = variant_from_string(name);
            } catch (const ContractError& e) {
                bad_field("train.variant", e.what());
            }
        }
        try {
            cfg.train.validate();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("train config: ") + e.what());
        }
        if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0)) {
            bad_field("train.train_fraction", "must be strictly inside (0, 1)");
        }
    }

    if (root.contains("paths")) {
        const json& p = root.at("paths");
        expect_keys(p, "paths", {"dataset", "out_dir", "checkpoint"});
        read(p, "paths", "dataset", cfg.dataset_path);
        read(p, "paths", "out_dir", cfg.out_dir);
        read(p, "paths", "checkpoint", cfg.checkpoint_path);
    }

    // The root seed also drives data generation and training.
    cfg.synthetic.seed = cfg.data_seed();
    cfg.train.seed = cfg.train_seed();
    return cfg;
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
    if (overrides.seed) {
        config.seed = *overrides.seed;
        config.synthetic.seed = config.data_seed();
        config.train.seed = config.train_seed();
    }
    if (overrides.variant) {
        try {
            config.train.variant = variant_from_string(*overrides.variant);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("--variant: ") + e.what());
        }
    }
    if (overrides.out) config.out_dir = *overrides.out;
    if (overrides.checkpoint) config.checkpoint_path = *overrides.checkpoint;
}

}  // namespace mlsgan::cli
