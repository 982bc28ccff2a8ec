#pragma once

#include <span>
#include <string>
#include <vector>

#include "mlsgan/rng.hpp"
#include "mlsgan/tensor.hpp"

namespace mlsgan {

/// Gated fusion unit over M input streams. Every stream n gets a tanh
/// encoding h_n = tanh(W_enc_n z_n) (no bias) and a sigmoid gate
/// q_n = sigmoid(W_gate_n [z_1,...,z_M] + b_n) computed from the
/// concatenation of all streams; the output is C = sum_n h_n * q_n.
///
/// Cross-stream sums (the gate logit's per-stream partials and the final
/// sum over gated streams) are accumulated in value order, so permuting
/// streams together with their weight pairs leaves the output bit-identical.
struct GatedFusionUnit {
    int fused = 0;
    std::vector<int> stream_dims;
    std::vector<Tensor> encode_w;  // per stream, [fused x dim_n]
    std::vector<Tensor> gate_w;    // per stream, [fused x total_dim]
    std::vector<Tensor> gate_b;    // per stream, [fused]

    static GatedFusionUnit init(std::vector<int> stream_dims, int fused, Rng& rng,
                                const std::string& name);

    int streams() const { return static_cast<int>(stream_dims.size()); }
    int total_dim() const;
    std::vector<Tensor> parameters() const;
};

/// Fused output C. Streams may be rank 1 ([dim_n]) or rank 2 ([B x dim_n],
/// rows independent); all streams must agree on rank and batch size.
Tensor gfu_forward(const GatedFusionUnit& unit, std::span<const Tensor> streams);

/// Two-stream convenience used by the discriminator; identical to
/// gfu_forward on {code_embed, scene_embed}.
Tensor gfu_pair_forward(const GatedFusionUnit& unit, const Tensor& code_embed,
                        const Tensor& scene_embed);

/// Gate values q_n from one forward pass as an [M x fused] tensor
/// (rank-1 streams). Pure read-out: never recorded on a tape.
Tensor gate_activations(const GatedFusionUnit& unit, std::span<const Tensor> streams);

namespace testing {
/// Test hook: negates the gate-weight gradient inside the GFU backward.
/// Exists so negative-control tests can prove the gradient checker
/// catches a corrupted backward pass. Never set outside tests.
void gfu_corrupt_backward(bool enable);
}  // namespace testing

}  // namespace mlsgan
