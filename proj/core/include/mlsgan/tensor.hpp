#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mlsgan/error.hpp"

namespace mlsgan {

namespace detail {

struct TensorData {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool leaf = true;  // false for op results recorded on a tape
    std::string name;

    int numel() const { return static_cast<int>(data.size()); }

    void ensure_grad() {
        if (grad.size() != data.size()) {
            grad.assign(data.size(), 0.0);
        }
    }
};

}  // namespace detail

std::string shape_str(std::span<const int> shape);

/// Dense n-dimensional array of doubles with optional participation in
/// reverse-mode autodiff. Copies are shallow (shared storage), matching
/// the handle semantics every op relies on for gradient accumulation;
/// use clone() for an independent value copy.
class Tensor {
public:
    Tensor() : d_(std::make_shared<detail::TensorData>()) {}

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    const std::vector<int>& shape() const { return d_->shape; }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    int numel() const { return d_->numel(); }
    int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }

    std::vector<double>& data() { return d_->data; }
    const std::vector<double>& data() const { return d_->data; }

    double& operator()(int i) { return d_->data[static_cast<std::size_t>(i)]; }
    double operator()(int i) const { return d_->data[static_cast<std::size_t>(i)]; }
    double& operator()(int i, int j) {
        return d_->data[static_cast<std::size_t>(i) * static_cast<std::size_t>(d_->shape[1]) +
                        static_cast<std::size_t>(j)];
    }
    double operator()(int i, int j) const {
        return d_->data[static_cast<std::size_t>(i) * static_cast<std::size_t>(d_->shape[1]) +
                        static_cast<std::size_t>(j)];
    }

    /// Value of a scalar (1-element) tensor.
    double value() const;

    bool requires_grad() const { return d_->requires_grad; }
    Tensor& set_requires_grad(bool rg) {
        d_->requires_grad = rg;
        return *this;
    }

    bool is_leaf() const { return d_->leaf; }
    bool has_grad() const { return !d_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad() {
        if (!d_->grad.empty()) {
            d_->grad.assign(d_->data.size(), 0.0);
        }
    }

    const std::string& name() const { return d_->name; }
    Tensor& set_name(std::string n) {
        d_->name = std::move(n);
        return *this;
    }

    /// Deep copy of values (never shares storage, never carries grad).
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

    std::shared_ptr<detail::TensorData> ptr() const { return d_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}

    std::shared_ptr<detail::TensorData> d_;
};

/// Ordered record of the primitive operations of one forward pass.
/// Construction pushes the tape onto a thread-local stack; ops record
/// themselves on the innermost active tape. Nodes are appended in
/// execution order, which is a topological order by construction, and
/// backward() replays each node's closure exactly once in reverse.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Innermost active tape on this thread, or nullptr.
    static Tape* active();

    /// Records one primitive op: the produced tensor and the closure that
    /// propagates its gradient to the op's inputs.
    void record(std::shared_ptr<detail::TensorData> out, std::function<void()> backward_fn);

    /// Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable
    /// from `loss`. Interior gradients are rebuilt from scratch on every
    /// call, so repeated calls without zero_grad() add whole gradients.
    void backward(const Tensor& loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::shared_ptr<detail::TensorData> out;
        std::function<void()> backward_fn;
    };

    std::vector<Node> nodes_;
};

}  // namespace mlsgan
