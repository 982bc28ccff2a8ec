#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlsgan/rng.hpp"
#include "mlsgan/tensor.hpp"

namespace mlsgan {

enum class Activation { None, Tanh, Sigmoid, Softmax };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected layer y = act(x W^T + b).
struct DenseLayer {
    Tensor w;  // [out x in]
    Tensor b;  // [out]
    Activation act = Activation::None;

    static DenseLayer init(int in_dim, int out_dim, Activation act, Rng& rng,
                           const std::string& name);

    int in_dim() const { return w.dim(1); }
    int out_dim() const { return w.dim(0); }
    std::vector<Tensor> parameters() const { return {w, b}; }
};

Tensor dense_forward(const DenseLayer& layer, const Tensor& x);

/// Single LSTM cell. Each gate weight is [hidden x (input + hidden)] and
/// acts on the concatenation [x_t, h_prev]. The forget-gate bias is
/// initialized to +1.
struct LSTMCell {
    int input_dim = 0;
    int hidden = 300;
    Tensor w_i, w_f, w_o, w_g;  // [hidden x (input+hidden)]
    Tensor b_i, b_f, b_o, b_g;  // [hidden]

    static LSTMCell init(int input_dim, int hidden, Rng& rng, const std::string& name);

    std::vector<Tensor> parameters() const { return {w_i, w_f, w_o, w_g, b_i, b_f, b_o, b_g}; }
};

/// One LSTM update. x/h/c may be rank 1 (one sample) or rank 2 (a batch,
/// rows independent). Returns (h_t, c_t).
std::pair<Tensor, Tensor> lstm_step(const LSTMCell& cell, const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev);

/// Encodes a [T x d] sequence from zero initial state; returns the final
/// hidden state h_T.
Tensor lstm_encode(const LSTMCell& cell, const Tensor& seq);

/// Batched encoder: steps[t] is [B x d]; returns [B x hidden]. Row b is
/// bit-identical to lstm_encode on sample b's sequence.
Tensor lstm_encode_steps(const LSTMCell& cell, std::span<const Tensor> steps);

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

/// Binary cross-entropy of every element of `p` against a constant 0/1
/// target, averaged over elements.
Tensor bce_loss(const Tensor& p, int target);

/// Mean of -log probs[b, labels[b]] over the batch. Rows of `probs` are
/// expected to be distributions (e.g. softmax output).
Tensor categorical_ce_loss(const Tensor& probs, std::span<const int> labels);

struct AdamSchedule {
    double lr1 = 1e-3;
    int epochs1 = 0;  // epochs trained at lr1; epoch >= epochs1 uses lr2
    double lr2 = 1e-3;
    int epochs2 = 0;

    double lr_at(int epoch) const { return epoch < epochs1 ? lr1 : lr2; }

    static AdamSchedule constant(double lr) { return {lr, 0, lr, 0}; }
    /// The factor-10 drop at a quarter of the run used by the trainer.
    static AdamSchedule quarter_drop(double lr, int total_epochs) {
        return {lr, total_epochs / 4, lr / 10.0, total_epochs - total_epochs / 4};
    }
};

/// Adam with bias correction and a two-phase learning-rate schedule.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    AdamSchedule schedule;
    long step_count = 0;
    std::vector<std::vector<double>> m, v;

    static AdamState init(std::span<const Tensor> params, AdamSchedule schedule);
};

/// One optimizer step over `params` using their accumulated gradients.
/// Parameters without a gradient buffer are treated as zero-gradient.
/// A NaN gradient aborts with a TrainingError naming the parameter.
void adam_step(AdamState& state, std::span<const Tensor> params, int epoch);

void zero_grads(std::span<const Tensor> params);
void set_requires_grad(std::span<const Tensor> params, bool rg);

/// Uniform Glorot initialization: U(+-sqrt(6 / (fan_in + fan_out))).
void glorot_init(Tensor& w, int fan_in, int fan_out, Rng& rng);

}  // namespace mlsgan
