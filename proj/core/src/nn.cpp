#include "mlsgan/nn.hpp"

#include <cmath>

#include "mlsgan/ops.hpp"

namespace mlsgan {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "none";
}

Activation activation_from_string(const std::string& s) {
    if (s == "none") return Activation::None;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    throw ContractError("unknown activation '" + s + "'");
}

void glorot_init(Tensor& w, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
}

DenseLayer DenseLayer::init(int in_dim, int out_dim, Activation act, Rng& rng,
                            const std::string& name) {
    if (in_dim <= 0 || out_dim <= 0) {
        throw ContractError("DenseLayer::init: dimensions must be positive");
    }
    DenseLayer layer;
    layer.w = Tensor::zeros({out_dim, in_dim}, true).set_name(name + ".w");
    layer.b = Tensor::zeros({out_dim}, true).set_name(name + ".b");
    layer.act = act;
    glorot_init(layer.w, in_dim, out_dim, rng);
    return layer;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& x) {
    Tensor y = linear(x, layer.w, layer.b);
    switch (layer.act) {
        case Activation::None: return y;
        case Activation::Tanh: return tanh(y);
        case Activation::Sigmoid: return sigmoid(y);
        case Activation::Softmax: return softmax(y);
    }
    return y;
}

LSTMCell LSTMCell::init(int input_dim, int hidden, Rng& rng, const std::string& name) {
    if (input_dim <= 0 || hidden <= 0) {
        throw ContractError("LSTMCell::init: dimensions must be positive");
    }
    LSTMCell cell;
    cell.input_dim = input_dim;
    cell.hidden = hidden;
    const int width = input_dim + hidden;
    auto make_w = [&](const char* gate) {
        Tensor w = Tensor::zeros({hidden, width}, true).set_name(name + ".w_" + gate);
        glorot_init(w, width, hidden, rng);
        return w;
    };
    cell.w_i = make_w("i");
    cell.w_f = make_w("f");
    cell.w_o = make_w("o");
    cell.w_g = make_w("g");
    cell.b_i = Tensor::zeros({hidden}, true).set_name(name + ".b_i");
    cell.b_f = Tensor::full({hidden}, 1.0, true).set_name(name + ".b_f");
    cell.b_o = Tensor::zeros({hidden}, true).set_name(name + ".b_o");
    cell.b_g = Tensor::zeros({hidden}, true).set_name(name + ".b_g");
    return cell;
}

std::pair<Tensor, Tensor> lstm_step(const LSTMCell& cell, const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev) {
    const int axis = x.rank() == 2 ? 1 : 0;
    const Tensor zs[2] = {x, h_prev};
    Tensor z = concat(std::span<const Tensor>(zs, 2), axis);
    Tensor i = sigmoid(linear(z, cell.w_i, cell.b_i));
    Tensor f = sigmoid(linear(z, cell.w_f, cell.b_f));
    Tensor o = sigmoid(linear(z, cell.w_o, cell.b_o));
    Tensor g = tanh(linear(z, cell.w_g, cell.b_g));
    Tensor c = add(mul(f, c_prev), mul(i, g));
    Tensor h = mul(o, tanh(c));
    return {h, c};
}

Tensor lstm_encode(const LSTMCell& cell, const Tensor& seq) {
    if (seq.rank() != 2) {
        throw DimensionError("lstm_encode: sequence must be [T x d], got " + shape_str(seq.shape()));
    }
    const int steps = seq.dim(0);
    if (steps < 1) {
        throw ContractError("lstm_encode: empty sequence");
    }
    Tensor h = Tensor::zeros({cell.hidden});
    Tensor c = Tensor::zeros({cell.hidden});
    for (int t = 0; t < steps; ++t) {
        auto [h_next, c_next] = lstm_step(cell, slice_row(seq, t), h, c);
        h = h_next;
        c = c_next;
    }
    return h;
}

Tensor lstm_encode_steps(const LSTMCell& cell, std::span<const Tensor> steps) {
    if (steps.empty()) {
        throw ContractError("lstm_encode_steps: empty sequence");
    }
    const int batch = steps[0].dim(0);
    Tensor h = Tensor::zeros({batch, cell.hidden});
    Tensor c = Tensor::zeros({batch, cell.hidden});
    for (const Tensor& x : steps) {
        auto [h_next, c_next] = lstm_step(cell, x, h, c);
        h = h_next;
        c = c_next;
    }
    return h;
}

Tensor bce_loss(const Tensor& p, int target) {
    if (target != 0 && target != 1) {
        throw ContractError("bce_loss: target must be 0 or 1");
    }
    Tensor pc = clamp(p, kProbClamp, 1.0 - kProbClamp);
    if (target == 1) {
        return scale(mean(log(pc)), -1.0);
    }
    Tensor ones = Tensor::full(p.shape(), 1.0);
    return scale(mean(log(sub(ones, pc))), -1.0);
}

Tensor categorical_ce_loss(const Tensor& probs, std::span<const int> labels) {
    Tensor picked = select_index(probs, labels);
    Tensor pc = clamp(picked, kProbClamp, 1.0 - kProbClamp);
    return scale(mean(log(pc)), -1.0);
}

AdamState AdamState::init(std::span<const Tensor> params, AdamSchedule schedule) {
    AdamState state;
    state.schedule = schedule;
    for (const Tensor& p : params) {
        state.m.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
        state.v.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    }
    return state;
}

void adam_step(AdamState& state, std::span<const Tensor> params, int epoch) {
    if (state.m.size() != params.size()) {
        throw ContractError("adam_step: state was initialized for a different parameter set");
    }
    const double lr = state.schedule.lr_at(epoch);
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        if (!p.has_grad()) continue;  // zero gradient, and fresh moments stay zero
        const std::vector<double>& g = p.grad();
        std::vector<double>& m = state.m[pi];
        std::vector<double>& v = state.v[pi];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (std::isnan(g[i])) {
                throw TrainingError("adam_step: NaN gradient in parameter '" +
                                    (p.name().empty() ? "param" + std::to_string(pi) : p.name()) +
                                    "'");
            }
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.data()[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

void zero_grads(std::span<const Tensor> params) {
    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
}

void set_requires_grad(std::span<const Tensor> params, bool rg) {
    for (const Tensor& p : params) const_cast<Tensor&>(p).set_requires_grad(rg);
}

}  // namespace mlsgan
