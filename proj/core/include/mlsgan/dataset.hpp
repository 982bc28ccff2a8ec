#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlsgan/tensor.hpp"

namespace mlsgan {

/// One labeled example: per-agent feature sequences, the scene-level
/// sequence, and the group class. individual_labels are generation
/// metadata only and are never consumed by the models.
struct SceneSample {
    std::vector<Tensor> person_seqs;  // one [T x d] per slot
    Tensor scene_seq;                 // [T x d]
    std::vector<bool> presence_mask;  // true = real agent, false = dummy pad
    int group_label = 0;
    std::vector<int> individual_labels;  // one per real agent

    int real_agents() const;
};

struct Dataset {
    int n_slots = 0;  // maximum agents N (fixed slot count after padding)
    int time_steps = 0;
    int feature_dim = 0;
    int k_group = 0;
    int k_ind = 0;
    std::vector<SceneSample> samples;

    std::vector<long long> class_histogram() const;
};

enum class LabelingRule {
    Majority,  // group label = mode of individual actions (ties -> lowest id)
    KeyAgent,  // group label = first agent's action
};

std::string to_string(LabelingRule r);
LabelingRule labeling_rule_from_string(const std::string& s);

struct SyntheticConfig {
    int k_group = 4;
    int k_ind = 0;  // 0 -> same as k_group
    int n_slots = 5;
    int time_steps = 10;
    int feature_dim = 8;
    int agents_min = 1;
    int agents_max = 5;
    double noise_std = 0.1;
    double class_separation = 1.0;
    double transition_prob = 0.0;
    // Strength of a per-group-class context trajectory mixed into the
    // scene sequence; 0 leaves the scene a pure agent mean. Models
    // frame-level context cues that person crops do not carry.
    double scene_context = 0.0;
    std::vector<double> class_weights;  // empty -> uniform over k_group
    LabelingRule labeling = LabelingRule::Majority;
    int sample_count = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Mode of a label multiset; ties break toward the lowest id.
int majority_label(std::span<const int> labels);

/// Seed-deterministic synthetic generation. Every feature value is
/// quantized through float32 so dataset files round-trip bit-exactly.
Dataset generate_synthetic(const SyntheticConfig& config);

/// Fills missing slots up to n_slots with all-zero sequences and a false
/// presence flag; existing slot order is preserved.
SceneSample pad_dummy(const SceneSample& sample, int n_slots);

/// Feature dataset files; format documented in docs/formats.md.
void save_dataset(const Dataset& dataset, const std::string& path, bool text = false);
Dataset load_dataset(const std::string& path);

/// Stratified, seed-deterministic split. Classes with fewer than two
/// samples go entirely to train (with a warning on stderr).
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

/// FNV-1a over the serialized samples; used to log that runs consumed the
/// identical split.
std::uint64_t dataset_fingerprint(const Dataset& dataset);

}  // namespace mlsgan
