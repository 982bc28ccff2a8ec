#include "mlsgan/ops.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace mlsgan {

namespace {

using detail::TensorData;
using DataPtr = std::shared_ptr<TensorData>;

void check_finite(const TensorData& t, const char* op) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": result contains a non-finite value");
        }
    }
}

bool recording(std::initializer_list<const Tensor*> inputs) {
    if (Tape::active() == nullptr) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void record(Tensor& out, std::function<void()> fn) {
    out.set_requires_grad(true);
    Tape::active()->record(out.ptr(), std::move(fn));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes differ: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

void accumulate(TensorData& t, const std::vector<double>& g) {
    t.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1)) {
        throw DimensionError("matmul: expects [m x n] . [n x p] or [m x n] . [n], got " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const int m = a.dim(0), n = a.dim(1);
    const bool vec = b.rank() == 1;
    const int p = vec ? 1 : b.dim(1);
    if ((vec ? b.dim(0) : b.dim(0)) != n) {
        throw DimensionError("matmul: inner dimensions differ: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    Tensor out = vec ? Tensor::zeros({m}) : Tensor::zeros({m, p});
    const double* av = a.data().data();
    const double* bv = b.data().data();
    double* ov = out.data().data();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += av[i * n + k] * bv[k * p + j];
            ov[i * p + j] = acc;
        }
    }
    check_finite(*out.ptr(), "matmul");
    if (recording({&a, &b})) {
        record(out, [ad = a.ptr(), bd = b.ptr(), od = out.ptr(), m, n, p] {
            const std::vector<double>& g = od->grad;
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int k = 0; k < n; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < p; ++j) acc += g[static_cast<std::size_t>(i * p + j)] * bd->data[static_cast<std::size_t>(k * p + j)];
                        ad->grad[static_cast<std::size_t>(i * n + k)] += acc;
                    }
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (int k = 0; k < n; ++k)
                    for (int j = 0; j < p; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i) acc += ad->data[static_cast<std::size_t>(i * n + k)] * g[static_cast<std::size_t>(i * p + j)];
                        bd->grad[static_cast<std::size_t>(k * p + j)] += acc;
                    }
            }
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2 || b.rank() != 1 || b.dim(0) != w.dim(0)) {
        throw DimensionError("linear: weight/bias shapes inconsistent: " + shape_str(w.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const bool vec = x.rank() == 1;
    if (!vec && x.rank() != 2) {
        throw DimensionError("linear: input must be rank 1 or 2, got " + shape_str(x.shape()));
    }
    const int rows = vec ? 1 : x.dim(0);
    const int in = vec ? x.dim(0) : x.dim(1);
    const int out_dim = w.dim(0);
    if (in != w.dim(1)) {
        throw DimensionError("linear: input width " + shape_str(x.shape()) +
                             " does not match weight " + shape_str(w.shape()));
    }
    Tensor out = vec ? Tensor::zeros({out_dim}) : Tensor::zeros({rows, out_dim});
    const double* xv = x.data().data();
    const double* wv = w.data().data();
    const double* bv = b.data().data();
    double* ov = out.data().data();
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < out_dim; ++o) {
            double acc = bv[o];
            const double* xr = xv + static_cast<std::size_t>(r) * in;
            const double* wr = wv + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += xr[i] * wr[i];
            ov[r * out_dim + o] = acc;
        }
    }
    check_finite(*out.ptr(), "linear");
    if (recording({&x, &w, &b})) {
        record(out, [xd = x.ptr(), wd = w.ptr(), bd = b.ptr(), od = out.ptr(), rows, in, out_dim] {
            const std::vector<double>& g = od->grad;
            if (wd->requires_grad) {
                wd->ensure_grad();
                for (int o = 0; o < out_dim; ++o)
                    for (int i = 0; i < in; ++i) {
                        double acc = 0.0;
                        for (int r = 0; r < rows; ++r)
                            acc += g[static_cast<std::size_t>(r * out_dim + o)] * xd->data[static_cast<std::size_t>(r * in + i)];
                        wd->grad[static_cast<std::size_t>(o * in + i)] += acc;
                    }
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (int o = 0; o < out_dim; ++o) {
                    double acc = 0.0;
                    for (int r = 0; r < rows; ++r) acc += g[static_cast<std::size_t>(r * out_dim + o)];
                    bd->grad[static_cast<std::size_t>(o)] += acc;
                }
            }
            if (xd->requires_grad) {
                xd->ensure_grad();
                for (int r = 0; r < rows; ++r)
                    for (int i = 0; i < in; ++i) {
                        double acc = 0.0;
                        for (int o = 0; o < out_dim; ++o)
                            acc += g[static_cast<std::size_t>(r * out_dim + o)] * wd->data[static_cast<std::size_t>(o * in + i)];
                        xd->grad[static_cast<std::size_t>(r * in + i)] += acc;
                    }
            }
        });
    }
    return out;
}

namespace {

template <typename Fwd>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* op, Fwd f,
                          std::function<void()> (*make_backward)(DataPtr, DataPtr, DataPtr)) {
    require_same_shape(a, b, op);
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < a.numel(); ++i) out.data()[static_cast<std::size_t>(i)] = f(a.data()[static_cast<std::size_t>(i)], b.data()[static_cast<std::size_t>(i)]);
    check_finite(*out.ptr(), op);
    if (recording({&a, &b})) {
        record(out, make_backward(a.ptr(), b.ptr(), out.ptr()));
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "add", [](double x, double y) { return x + y; },
        +[](DataPtr ad, DataPtr bd, DataPtr od) -> std::function<void()> {
            return [ad, bd, od] {
                if (ad->requires_grad) accumulate(*ad, od->grad);
                if (bd->requires_grad) accumulate(*bd, od->grad);
            };
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "sub", [](double x, double y) { return x - y; },
        +[](DataPtr ad, DataPtr bd, DataPtr od) -> std::function<void()> {
            return [ad, bd, od] {
                if (ad->requires_grad) accumulate(*ad, od->grad);
                if (bd->requires_grad) {
                    bd->ensure_grad();
                    for (std::size_t i = 0; i < od->grad.size(); ++i) bd->grad[i] -= od->grad[i];
                }
            };
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "mul", [](double x, double y) { return x * y; },
        +[](DataPtr ad, DataPtr bd, DataPtr od) -> std::function<void()> {
            return [ad, bd, od] {
                if (ad->requires_grad) {
                    ad->ensure_grad();
                    for (std::size_t i = 0; i < od->grad.size(); ++i)
                        ad->grad[i] += od->grad[i] * bd->data[i];
                }
                if (bd->requires_grad) {
                    bd->ensure_grad();
                    for (std::size_t i = 0; i < od->grad.size(); ++i)
                        bd->grad[i] += od->grad[i] * ad->data[i];
                }
            };
        });
}

Tensor scale(const Tensor& t, double s) {
    Tensor out = Tensor::zeros(t.shape());
    for (int i = 0; i < t.numel(); ++i) out.data()[static_cast<std::size_t>(i)] = s * t.data()[static_cast<std::size_t>(i)];
    check_finite(*out.ptr(), "scale");
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), s] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (std::size_t i = 0; i < od->grad.size(); ++i) td->grad[i] += s * od->grad[i];
        });
    }
    return out;
}

namespace {

// Unary ops whose local derivative is a function of the output value.
Tensor unary_from_output(const Tensor& t, const char* op, double (*f)(double), double (*dydx_of_y)(double)) {
    Tensor out = Tensor::zeros(t.shape());
    for (int i = 0; i < t.numel(); ++i) out.data()[static_cast<std::size_t>(i)] = f(t.data()[static_cast<std::size_t>(i)]);
    check_finite(*out.ptr(), op);
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), dydx_of_y] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (std::size_t i = 0; i < od->grad.size(); ++i)
                td->grad[i] += od->grad[i] * dydx_of_y(od->data[i]);
        });
    }
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor tanh(const Tensor& t) {
    return unary_from_output(
        t, "tanh", +[](double x) { return std::tanh(x); }, +[](double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& t) {
    return unary_from_output(
        t, "sigmoid", +[](double x) { return stable_sigmoid(x); },
        +[](double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& t) {
    for (double v : t.data()) {
        if (v <= 0.0) {
            throw DomainError("log: non-positive element " + std::to_string(v));
        }
    }
    Tensor out = Tensor::zeros(t.shape());
    for (int i = 0; i < t.numel(); ++i) out.data()[static_cast<std::size_t>(i)] = std::log(t.data()[static_cast<std::size_t>(i)]);
    check_finite(*out.ptr(), "log");
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr()] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (std::size_t i = 0; i < od->grad.size(); ++i) td->grad[i] += od->grad[i] / td->data[i];
        });
    }
    return out;
}

Tensor clamp(const Tensor& t, double lo, double hi) {
    if (!(lo < hi)) {
        throw ContractError("clamp: lo must be < hi");
    }
    Tensor out = Tensor::zeros(t.shape());
    for (int i = 0; i < t.numel(); ++i) {
        double v = t.data()[static_cast<std::size_t>(i)];
        out.data()[static_cast<std::size_t>(i)] = v < lo ? lo : (v > hi ? hi : v);
    }
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), lo, hi] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (std::size_t i = 0; i < od->grad.size(); ++i) {
                double v = td->data[i];
                if (v > lo && v < hi) td->grad[i] += od->grad[i];
            }
        });
    }
    return out;
}

Tensor concat(std::span<const Tensor> tensors, int axis) {
    if (tensors.empty()) {
        throw ContractError("concat: no tensors given");
    }
    const int rank = tensors[0].rank();
    if (axis < 0 || axis >= rank) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                             std::to_string(rank));
    }
    std::vector<int> out_shape = tensors[0].shape();
    for (std::size_t t = 1; t < tensors.size(); ++t) {
        if (tensors[t].rank() != rank) {
            throw DimensionError("concat: rank mismatch: " + shape_str(tensors[0].shape()) +
                                 " vs " + shape_str(tensors[t].shape()));
        }
        for (int d = 0; d < rank; ++d) {
            if (d != axis && tensors[t].dim(d) != out_shape[static_cast<std::size_t>(d)]) {
                throw DimensionError("concat: shapes differ off-axis: " +
                                     shape_str(tensors[0].shape()) + " vs " +
                                     shape_str(tensors[t].shape()));
            }
        }
        out_shape[static_cast<std::size_t>(axis)] += tensors[t].dim(axis);
    }
    Tensor out = Tensor::zeros(out_shape);

    int outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<std::size_t>(d)];
    for (int d = axis + 1; d < rank; ++d) inner *= out_shape[static_cast<std::size_t>(d)];
    const int out_along = out_shape[static_cast<std::size_t>(axis)];

    int offset = 0;
    bool any_grad = false;
    for (const Tensor& t : tensors) {
        const int along = t.dim(axis);
        for (int o = 0; o < outer; ++o) {
            const double* src = t.data().data() + static_cast<std::size_t>(o) * along * inner;
            double* dst = out.data().data() +
                          (static_cast<std::size_t>(o) * out_along + offset) * inner;
            for (int j = 0; j < along * inner; ++j) dst[j] = src[j];
        }
        offset += along;
        any_grad = any_grad || t.requires_grad();
    }
    if (Tape::active() != nullptr && any_grad) {
        std::vector<DataPtr> srcs;
        std::vector<int> alongs;
        for (const Tensor& t : tensors) {
            srcs.push_back(t.ptr());
            alongs.push_back(t.dim(axis));
        }
        record(out, [srcs, alongs, od = out.ptr(), outer, inner, out_along] {
            int offset = 0;
            for (std::size_t s = 0; s < srcs.size(); ++s) {
                const int along = alongs[s];
                if (srcs[s]->requires_grad) {
                    srcs[s]->ensure_grad();
                    for (int o = 0; o < outer; ++o) {
                        const double* g = od->grad.data() +
                                          (static_cast<std::size_t>(o) * out_along + offset) * inner;
                        double* dst = srcs[s]->grad.data() + static_cast<std::size_t>(o) * along * inner;
                        for (int j = 0; j < along * inner; ++j) dst[j] += g[j];
                    }
                }
                offset += along;
            }
        });
    }
    return out;
}

namespace {

Tensor reduce_all(const Tensor& t, bool take_mean) {
    double acc = 0.0;
    for (double v : t.data()) acc += v;
    const double denom = take_mean ? static_cast<double>(t.numel()) : 1.0;
    Tensor out = Tensor::scalar(acc / denom);
    check_finite(*out.ptr(), take_mean ? "mean" : "sum");
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), denom] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            const double g = od->grad[0] / denom;
            for (double& gv : td->grad) gv += g;
        });
    }
    return out;
}

Tensor reduce_axis(const Tensor& t, int axis, bool take_mean) {
    const int rank = t.rank();
    if (axis < 0 || axis >= rank) {
        throw DimensionError("reduce: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(t.shape()));
    }
    std::vector<int> out_shape;
    int outer = 1, inner = 1;
    for (int d = 0; d < rank; ++d) {
        if (d < axis) outer *= t.dim(d);
        if (d > axis) inner *= t.dim(d);
        if (d != axis) out_shape.push_back(t.dim(d));
    }
    const int along = t.dim(axis);
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor out = Tensor::zeros(out_shape);
    const double denom = take_mean ? static_cast<double>(along) : 1.0;
    for (int o = 0; o < outer; ++o)
        for (int i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (int a = 0; a < along; ++a)
                acc += t.data()[(static_cast<std::size_t>(o) * along + a) * inner + i];
            out.data()[static_cast<std::size_t>(o) * inner + i] = acc / denom;
        }
    check_finite(*out.ptr(), take_mean ? "mean" : "sum");
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), outer, inner, along, denom] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (int o = 0; o < outer; ++o)
                for (int i = 0; i < inner; ++i) {
                    const double g = od->grad[static_cast<std::size_t>(o) * inner + i] / denom;
                    for (int a = 0; a < along; ++a)
                        td->grad[(static_cast<std::size_t>(o) * along + a) * inner + i] += g;
                }
        });
    }
    return out;
}

}  // namespace

Tensor sum(const Tensor& t) { return reduce_all(t, false); }
Tensor mean(const Tensor& t) { return reduce_all(t, true); }
Tensor sum(const Tensor& t, int axis) { return reduce_axis(t, axis, false); }
Tensor mean(const Tensor& t, int axis) { return reduce_axis(t, axis, true); }

Tensor softmax(const Tensor& t) {
    if (t.rank() != 1 && t.rank() != 2) {
        throw DimensionError("softmax: rank must be 1 or 2, got " + shape_str(t.shape()));
    }
    const int rows = t.rank() == 2 ? t.dim(0) : 1;
    const int k = t.rank() == 2 ? t.dim(1) : t.dim(0);
    if (k < 1) {
        throw DimensionError("softmax: empty rows in " + shape_str(t.shape()));
    }
    Tensor out = Tensor::zeros(t.shape());
    for (int r = 0; r < rows; ++r) {
        const double* x = t.data().data() + static_cast<std::size_t>(r) * k;
        double* y = out.data().data() + static_cast<std::size_t>(r) * k;
        double mx = x[0];
        for (int i = 1; i < k; ++i) mx = std::max(mx, x[i]);
        double z = 0.0;
        for (int i = 0; i < k; ++i) {
            y[i] = std::exp(x[i] - mx);
            z += y[i];
        }
        for (int i = 0; i < k; ++i) y[i] /= z;
    }
    check_finite(*out.ptr(), "softmax");
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), rows, k] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (int r = 0; r < rows; ++r) {
                const double* y = od->data.data() + static_cast<std::size_t>(r) * k;
                const double* g = od->grad.data() + static_cast<std::size_t>(r) * k;
                double dot = 0.0;
                for (int i = 0; i < k; ++i) dot += g[i] * y[i];
                double* dx = td->grad.data() + static_cast<std::size_t>(r) * k;
                for (int i = 0; i < k; ++i) dx[i] += y[i] * (g[i] - dot);
            }
        });
    }
    return out;
}

Tensor slice_row(const Tensor& t, int row) {
    if (t.rank() != 2) {
        throw DimensionError("slice_row: expects rank 2, got " + shape_str(t.shape()));
    }
    if (row < 0 || row >= t.dim(0)) {
        throw DimensionError("slice_row: row " + std::to_string(row) + " out of range for " +
                             shape_str(t.shape()));
    }
    const int cols = t.dim(1);
    Tensor out = Tensor::zeros({cols});
    for (int j = 0; j < cols; ++j) out.data()[static_cast<std::size_t>(j)] = t(row, j);
    if (recording({&t})) {
        record(out, [td = t.ptr(), od = out.ptr(), row, cols] {
            if (!td->requires_grad) return;
            td->ensure_grad();
            for (int j = 0; j < cols; ++j)
                td->grad[static_cast<std::size_t>(row) * cols + j] += od->grad[static_cast<std::size_t>(j)];
        });
    }
    return out;
}

Tensor select_index(const Tensor& probs, std::span<const int> labels) {
    const int rows = probs.rank() == 2 ? probs.dim(0) : 1;
    const int k = probs.rank() == 2 ? probs.dim(1) : probs.dim(0);
    if (probs.rank() > 2) {
        throw DimensionError("select_index: rank must be 1 or 2, got " + shape_str(probs.shape()));
    }
    if (static_cast<int>(labels.size()) != rows) {
        throw ContractError("select_index: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(rows) + " rows");
    }
    for (int b = 0; b < rows; ++b) {
        if (labels[static_cast<std::size_t>(b)] < 0 || labels[static_cast<std::size_t>(b)] >= k) {
            throw ContractError("select_index: label " + std::to_string(labels[static_cast<std::size_t>(b)]) +
                                " out of range [0," + std::to_string(k) + ")");
        }
    }
    Tensor out = Tensor::zeros({rows});
    for (int b = 0; b < rows; ++b)
        out.data()[static_cast<std::size_t>(b)] =
            probs.data()[static_cast<std::size_t>(b) * k + labels[static_cast<std::size_t>(b)]];
    if (recording({&probs})) {
        std::vector<int> lab(labels.begin(), labels.end());
        record(out, [pd = probs.ptr(), od = out.ptr(), lab, k] {
            if (!pd->requires_grad) return;
            pd->ensure_grad();
            for (std::size_t b = 0; b < lab.size(); ++b)
                pd->grad[b * static_cast<std::size_t>(k) + static_cast<std::size_t>(lab[b])] += od->grad[b];
        });
    }
    return out;
}

}  // namespace mlsgan
