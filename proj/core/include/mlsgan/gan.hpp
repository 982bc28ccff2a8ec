#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mlsgan/dataset.hpp"
#include "mlsgan/gfu.hpp"
#include "mlsgan/nn.hpp"
#include "mlsgan/tensor.hpp"

namespace mlsgan {

/// Architecture hyperparameters shared by generator and discriminator.
struct ModelConfig {
    int n_agents = 5;     // person slots N
    int time_steps = 10;  // T
    int feature_dim = 8;  // d
    int classes = 4;      // k
    int hidden = 300;     // LSTM hidden size
    int z_dim = 16;
    int fused = 0;  // 0 -> same as hidden

    int fused_dim() const { return fused > 0 ? fused : hidden; }
    void validate() const;
};

/// Generator input: one padded sample plus a latent vector. The presence
/// mask is bookkeeping only; the network sees the zero dummy sequences.
struct GeneratorInput {
    std::vector<Tensor> person_seqs;  // N slots of [T x d]
    Tensor scene_seq;                 // [T x d]
    std::vector<bool> presence_mask;
    Tensor z;  // [z_dim]
};

GeneratorInput make_generator_input(const SceneSample& padded, Tensor z);

/// Generator: per-slot LSTM encoders (persons, then scene as the last
/// stream), gated fusion (or concat+dense when ablated), and a sigmoid
/// output layer producing an internal-form action code in (0,1)^k.
struct GeneratorParams {
    ModelConfig cfg;
    bool use_gfu = true;
    bool use_scene = true;
    std::vector<LSTMCell> person_cells;  // N cells
    std::optional<LSTMCell> scene_cell;
    std::optional<GatedFusionUnit> gfu;
    std::optional<DenseLayer> fuse_dense;  // concat fusion for the no-GFU ablation
    DenseLayer out;                        // (fused + z_dim) -> k, sigmoid

    static GeneratorParams make(const ModelConfig& cfg, bool use_gfu, bool use_scene, Rng& rng);

    int stream_count() const { return cfg.n_agents + (use_scene ? 1 : 0); }
    std::vector<Tensor> parameters() const;
};

/// Stream encodings (LSTM final hidden states) for one sample;
/// exposed for gate-attention analysis.
std::vector<Tensor> generator_streams(const GeneratorParams& params, const GeneratorInput& input);

Tensor generator_forward(const GeneratorParams& params, const GeneratorInput& input);

/// Batched forward over padded samples: zs is [B x z_dim]; returns
/// [B x k]. Row b is bit-identical to the per-sample call.
Tensor generator_forward_batch(const GeneratorParams& params, std::span<const SceneSample> padded,
                               const Tensor& zs);

/// Discriminator: scene LSTM + code embedding fused by a two-stream GFU,
/// with an adversarial sigmoid head and a softmax class head. Receives no
/// person-level streams.
struct DiscriminatorParams {
    ModelConfig cfg;
    LSTMCell scene_cell;
    DenseLayer code_embed;  // k -> fused, tanh
    GatedFusionUnit gfu;    // M = 2: {code, scene}
    DenseLayer adv_head;    // fused -> 1, sigmoid
    DenseLayer cls_head;    // fused -> k, softmax

    static DiscriminatorParams make(const ModelConfig& cfg, Rng& rng);

    std::vector<Tensor> parameters() const;
};

struct DiscriminatorOut {
    Tensor p_real;       // [1] or [B x 1], in (0,1)
    Tensor class_probs;  // [k] or [B x k], rows sum to 1
};

DiscriminatorOut discriminator_forward(const DiscriminatorParams& params, const Tensor& scene_seq,
                                       const Tensor& code);
DiscriminatorOut discriminator_forward_batch(const DiscriminatorParams& params,
                                             std::span<const SceneSample> samples,
                                             const Tensor& codes);

/// Discriminator objective on a half-real/half-fake batch: the adversarial
/// terms plus lambda_c times the classification term on the real-code half.
Tensor d_loss(const Tensor& p_real_on_real, const Tensor& p_real_on_fake,
              const Tensor& class_probs_real, std::span<const int> labels, double lambda_c);

/// Generator objective on generated codes. Non-saturating by default
/// (maximize log D(fake)); `non_saturating = false` selects the literal
/// minimax surrogate (minimize log(1 - D(fake))). `class_term` controls
/// whether the generator receives classification gradient.
Tensor g_loss(const Tensor& p_real_on_fake, const Tensor& class_probs_fake,
              std::span<const int> labels, double lambda_c, bool non_saturating = true,
              bool class_term = true);

}  // namespace mlsgan
