#pragma once

#include <span>

#include "mlsgan/tensor.hpp"

namespace mlsgan {

// Primitive differentiable operations. Each op computes its value, verifies
// the result is finite, and, when a tape is active and any input requires
// grad, records a closure that scatters the output gradient to the inputs.
// Binary elementwise ops demand identical shapes; the only broadcasting in
// the library is scalar*tensor (scale) and the bias row of linear().

/// [m x n] . [n x p] -> [m x p], or [m x n] . [n] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Affine map y = x W^T + b with x [batch x in] or [in], W [out x in],
/// b [out]. Row-wise results are bit-identical to the single-row call.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double s);

Tensor tanh(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor log(const Tensor& t);

/// Clamp to [lo, hi]; gradient passes through strictly inside the range.
Tensor clamp(const Tensor& t, double lo, double hi);

Tensor concat(std::span<const Tensor> tensors, int axis);

Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);
Tensor sum(const Tensor& t, int axis);
Tensor mean(const Tensor& t, int axis);

/// Row-stabilized softmax over the last axis (rank 1 or 2).
Tensor softmax(const Tensor& t);

/// Row r of a rank-2 tensor as a rank-1 tensor.
Tensor slice_row(const Tensor& t, int row);

/// probs [batch x k] with labels[b] in [0, k) -> [batch] of probs[b, label].
/// Rank-1 probs are treated as a single row.
Tensor select_index(const Tensor& probs, std::span<const int> labels);

}  // namespace mlsgan
