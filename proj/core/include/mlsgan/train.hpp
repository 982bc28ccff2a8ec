#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlsgan/dataset.hpp"
#include "mlsgan/gan.hpp"
#include "mlsgan/metrics.hpp"

namespace mlsgan {

/// Model variants. The three GAN ablation axes are: GFU vs plain
/// concatenation fusion, scene stream present vs absent in the generator,
/// and adversarial vs purely supervised training. The discriminator always
/// keeps its scene input.
enum class Variant {
    MlsGan,            // GFU + scene + GAN objective
    GGfuAblated,       // supervised, concat fusion ("G-GFU")
    GSupervised,       // supervised, GFU fusion ("G")
    CganNoGfuNoScene,  // GAN, concat fusion, person streams only
    CganGfu,           // GAN, concat fusion, scene included
    MlsGanNoScene,     // GAN, GFU fusion, person streams only
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
const std::vector<Variant>& all_variants();
bool is_supervised(Variant v);
bool has_gfu(Variant v);

/// Generator + optional discriminator + optional supervised softmax head
/// (a k -> k dense layer reading the action code, also used as the probe).
struct ModelAssembly {
    Variant variant = Variant::MlsGan;
    ModelConfig cfg;
    GeneratorParams gen;
    std::optional<DiscriminatorParams> disc;
    std::optional<DenseLayer> cls_head;

    std::vector<Tensor> parameters() const;
    std::vector<Tensor> gen_side_parameters() const;  // generator (+ head when supervised)
};

ModelAssembly build_variant(Variant variant, const ModelConfig& cfg, Rng& init_rng);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;  // must be even: half-real/half-fake D batches
    double lambda_c = 2.5;
    double lr = 1e-3;
    // 0 -> the default factor-10 drop at a quarter of the epochs.
    int lr_drop_epoch = 0;
    std::uint64_t seed = 0;
    Variant variant = Variant::MlsGan;
    int eval_every = 1;
    bool non_saturating = true;
    bool g_class_term = true;
    int infer_z_samples = 0;   // 0 -> deterministic z = 0 at inference
    double stop_at_mca = -1.0; // >0 -> stop once test MCA reaches this
    int start_epoch = 0;       // resume support: epoch numbering continues
    int debug_inject_nan_at_step = -1;  // test hook, never set from configs
    // Invoked after every epoch (progress logging); not part of the
    // serialized config.
    std::function<void(const EpochRow&)> on_epoch;

    void validate() const;
    AdamSchedule schedule() const;
};

struct TrainSummary {
    MetricsReport report;  // final test metrics + per-epoch history
    int d_steps = 0;
    int g_steps = 0;
    int epochs_run = 0;
};

/// Alternating GAN trainer (or plain supervised loop for the supervised
/// variants). One D step on a half-real/half-fake batch, then one G step
/// on the full batch with the discriminator frozen. Deterministic given
/// (config, model init, dataset).
class Trainer {
public:
    Trainer(ModelAssembly& model, const TrainConfig& config, const Dataset& train_set,
            const Dataset& test_set);

    TrainSummary run();

    /// Single steps exposed for contract tests; `batch` holds sample
    /// indices into the padded training set.
    double d_step(std::span<const int> batch, int epoch);
    double g_step(std::span<const int> batch, int epoch);
    double supervised_step(std::span<const int> batch, int epoch);

    int d_steps_taken() const { return d_steps_; }
    int g_steps_taken() const { return g_steps_; }

private:
    ModelAssembly& model_;
    TrainConfig config_;
    const Dataset& test_set_;
    std::vector<SceneSample> train_padded_;
    std::vector<int> train_labels_;
    AdamState gen_opt_;
    std::optional<AdamState> disc_opt_;
    Rng z_rng_;
    Rng shuffle_rng_;
    int d_steps_ = 0;
    int g_steps_ = 0;
    long long steps_total_ = 0;

    Tensor sample_z_batch(int batch);
    void maybe_inject_nan(std::span<const Tensor> params);
};

TrainSummary train(ModelAssembly& model, const TrainConfig& config, const Dataset& train_set,
                   const Dataset& test_set);

/// Class prediction for one (unpadded) sample. GAN variants classify via
/// argmax D_c(scene, G(input, z)); supervised variants via the softmax
/// head on the generated code. z is the zero vector unless z_samples > 0,
/// in which case class probabilities are averaged over a fixed set of
/// seeded draws (still deterministic per call).
int classify(const ModelAssembly& model, const SceneSample& sample, int z_samples = 0,
             std::uint64_t z_seed = 0);

MetricsReport evaluate(const ModelAssembly& model, const Dataset& dataset, int z_samples = 0,
                       std::uint64_t z_seed = 0);

struct ProbeConfig {
    int epochs = 200;
    double lr = 0.05;
    std::uint64_t seed = 0;
};

/// Trains a fresh dense+softmax layer on the frozen generator's codes and
/// reports test metrics. Throws if any generator weight changes.
MetricsReport probe_codes(const ModelAssembly& trained, const Dataset& train_set,
                          const Dataset& test_set, const ProbeConfig& config);

struct SlotGateStats {
    int slot = 0;  // persons 0..N-1, then the scene slot when present
    double mean_present = 0.0;
    long long n_present = 0;
    double mean_dummy = 0.0;
    long long n_dummy = 0;
};

/// Mean gate activation per stream slot over a dataset, split by the
/// presence mask. Requires a GFU variant.
std::vector<SlotGateStats> gate_attention_report(const ModelAssembly& model,
                                                 const Dataset& dataset);

}  // namespace mlsgan
