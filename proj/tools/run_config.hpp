#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mlsgan/dataset.hpp"
#include "mlsgan/gan.hpp"
#include "mlsgan/train.hpp"

namespace mlsgan::cli {

/// One structured config file drives every command. All randomness flows
/// from the root seed via named sub-streams, so a run is pinned by
/// (config file, seed). Unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    SyntheticConfig synthetic;
    ModelConfig model;  // hidden/z_dim/fused; data dims come from the dataset file
    TrainConfig train;
    double train_fraction = 0.8;
    std::string dataset_path;
    std::string out_dir = ".";
    std::string checkpoint_path;

    std::uint64_t data_seed() const;
    std::uint64_t split_seed() const;
    std::uint64_t init_seed() const;
    std::uint64_t train_seed() const;
    std::uint64_t probe_seed() const;

    /// Model config completed with the dataset's dimensions.
    ModelConfig model_for(const Dataset& dataset) const;
};

/// Parses and validates a config file. Throws ConfigError with a
/// field-level message on unknown keys, wrong types, or bad values.
RunConfig load_run_config(const std::string& path);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<std::string> out;
    std::optional<std::string> checkpoint;
};

/// Command-line flags win over file values.
void apply_overrides(RunConfig& config, const CliOverrides& overrides);

}  // namespace mlsgan::cli
