#pragma once

// Test-only reference implementations, kept independent of the tensor-op
// path they are used to verify.

#include <cmath>
#include <vector>

#include "mlsgan/nn.hpp"

namespace mlsgan_test {

inline double oracle_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct NaiveLstmState {
    std::vector<double> h, c;
};

/// One LSTM step computed with plain scalar loops over the raw weight
/// arrays; never touches the autodiff ops.
inline NaiveLstmState naive_lstm_step(const mlsgan::LSTMCell& cell, const std::vector<double>& x,
                                      const NaiveLstmState& prev) {
    const int hidden = cell.hidden;
    const int in_dim = cell.input_dim;
    std::vector<double> joined(x);
    joined.insert(joined.end(), prev.h.begin(), prev.h.end());
    auto gate = [&](const mlsgan::Tensor& w, const mlsgan::Tensor& b, int row) {
        double acc = b.data()[static_cast<std::size_t>(row)];
        for (int j = 0; j < in_dim + hidden; ++j) {
            acc += w.data()[static_cast<std::size_t>(row * (in_dim + hidden) + j)] * joined[static_cast<std::size_t>(j)];
        }
        return acc;
    };
    NaiveLstmState next;
    next.h.resize(static_cast<std::size_t>(hidden));
    next.c.resize(static_cast<std::size_t>(hidden));
    for (int r = 0; r < hidden; ++r) {
        const double i = oracle_sigmoid(gate(cell.w_i, cell.b_i, r));
        const double f = oracle_sigmoid(gate(cell.w_f, cell.b_f, r));
        const double o = oracle_sigmoid(gate(cell.w_o, cell.b_o, r));
        const double g = std::tanh(gate(cell.w_g, cell.b_g, r));
        next.c[static_cast<std::size_t>(r)] = f * prev.c[static_cast<std::size_t>(r)] + i * g;
        next.h[static_cast<std::size_t>(r)] = o * std::tanh(next.c[static_cast<std::size_t>(r)]);
    }
    return next;
}

inline std::vector<double> naive_lstm_encode(const mlsgan::LSTMCell& cell,
                                             const std::vector<std::vector<double>>& seq) {
    NaiveLstmState state;
    state.h.assign(static_cast<std::size_t>(cell.hidden), 0.0);
    state.c.assign(static_cast<std::size_t>(cell.hidden), 0.0);
    for (const std::vector<double>& x : seq) state = naive_lstm_step(cell, x, state);
    return state.h;
}

}  // namespace mlsgan_test
