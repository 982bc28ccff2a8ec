#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "run_config.hpp"

using namespace mlsgan;
using namespace mlsgan::cli;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / ("mlsgan_cfg_" + name);
    std::ofstream os(path);
    os << body;
    return path.string();
}

}  // namespace

TEST_CASE("config: full round-trip of known keys") {
    const std::string path = write_temp("full.json", R"({
  "seed": 42,
  "synthetic": {"k_group": 4, "n_slots": 5, "time_steps": 6, "feature_dim": 7,
                "agents_min": 2, "agents_max": 5, "noise_std": 0.5,
                "class_separation": 2.5, "transition_prob": 0.2, "scene_context": 0.5,
                "labeling": "key_agent", "sample_count": 100},
  "model": {"hidden": 12, "z_dim": 3, "fused": 10},
  "train": {"epochs": 9, "batch_size": 4, "lambda_c": 1.5, "lr": 0.005,
            "variant": "cgan_gfu", "train_fraction": 0.7, "stop_at_mca": 0.95},
  "paths": {"dataset": "d.bin", "out_dir": "outs", "checkpoint": "c.ckpt"}
})");
    RunConfig cfg = load_run_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.synthetic.k_group == 4);
    CHECK(cfg.synthetic.labeling == LabelingRule::KeyAgent);
    CHECK(cfg.synthetic.scene_context == 0.5);
    CHECK(cfg.model.hidden == 12);
    CHECK(cfg.train.epochs == 9);
    CHECK(cfg.train.variant == Variant::CganGfu);
    CHECK(cfg.train.stop_at_mca == 0.95);
    CHECK(cfg.train_fraction == 0.7);
    CHECK(cfg.dataset_path == "d.bin");
    CHECK(cfg.out_dir == "outs");
    CHECK(cfg.checkpoint_path == "c.ckpt");
    // Sub-streams derive from the root seed.
    CHECK(cfg.synthetic.seed == cfg.data_seed());
    CHECK(cfg.train.seed == cfg.train_seed());
    CHECK(cfg.data_seed() != cfg.train_seed());
    std::remove(path.c_str());
}

TEST_CASE("config: unknown keys are rejected with their path") {
    const std::string path = write_temp("unknown.json", R"({"train": {"learning_rate": 0.1}})");
    try {
        load_run_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.learning_rate") != std::string::npos);
    }
    std::remove(path.c_str());

    const std::string top = write_temp("unknown_top.json", R"({"sed": 1})");
    CHECK_THROWS_AS(load_run_config(top), ConfigError);
    std::remove(top.c_str());
}

TEST_CASE("config: type and constraint violations carry field names") {
    const std::string bad_type = write_temp("type.json", R"({"train": {"epochs": "ten"}})");
    try {
        load_run_config(bad_type);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
    }
    std::remove(bad_type.c_str());

    const std::string odd_batch = write_temp("odd.json", R"({"train": {"batch_size": 7}})");
    CHECK_THROWS_AS(load_run_config(odd_batch), ConfigError);
    std::remove(odd_batch.c_str());

    const std::string not_json = write_temp("garbage.json", "not json at all {{{");
    CHECK_THROWS_AS(load_run_config(not_json), ConfigError);
    std::remove(not_json.c_str());

    CHECK_THROWS_AS(load_run_config("/definitely/missing/config.json"), IoError);
}

TEST_CASE("config: CLI overrides win over file values") {
    const std::string path = write_temp("override.json", R"({
  "seed": 1,
  "train": {"variant": "mls_gan"},
  "paths": {"out_dir": "file_out"}
})");
    RunConfig cfg = load_run_config(path);
    CliOverrides overrides;
    overrides.seed = 99;
    overrides.variant = "g_supervised";
    overrides.out = "cli_out";
    apply_overrides(cfg, overrides);
    CHECK(cfg.seed == 99);
    CHECK(cfg.train.variant == Variant::GSupervised);
    CHECK(cfg.out_dir == "cli_out");
    CHECK(cfg.synthetic.seed == derive_seed(99, "data"));

    CliOverrides bad;
    bad.variant = "bogus";
    CHECK_THROWS_AS(apply_overrides(cfg, bad), ConfigError);
    std::remove(path.c_str());
}
