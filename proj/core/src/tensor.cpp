#include "mlsgan/tensor.hpp"

#include <numeric>
#include <sstream>

namespace mlsgan {

std::string shape_str(std::span<const int> shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e < 0) {
            throw DimensionError("negative extent in shape " + shape_str(shape));
        }
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t;
    std::size_t n = checked_numel(shape);
    t.d_->shape = std::move(shape);
    t.d_->data.assign(n, value);
    t.d_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    std::size_t n = checked_numel(shape);
    if (n != data.size()) {
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.d_->shape = std::move(shape);
    t.d_->data = std::move(data);
    t.d_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

double Tensor::value() const {
    if (numel() != 1) {
        throw ContractError("value() requires a scalar tensor, shape is " + shape_str(shape()));
    }
    return d_->data[0];
}

const std::vector<double>& Tensor::grad() const {
    if (d_->grad.empty()) {
        throw ContractError("tensor '" + d_->name + "' has no gradient");
    }
    return d_->grad;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.d_->shape = d_->shape;
    t.d_->data = d_->data;
    t.d_->requires_grad = d_->requires_grad;
    t.d_->name = d_->name;
    return t;
}

namespace {
thread_local std::vector<Tape*> g_tape_stack;
}

Tape::Tape() { g_tape_stack.push_back(this); }

Tape::~Tape() { g_tape_stack.pop_back(); }

Tape* Tape::active() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

void Tape::record(std::shared_ptr<detail::TensorData> out, std::function<void()> backward_fn) {
    out->leaf = false;
    nodes_.push_back(Node{std::move(out), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward: loss must be scalar, shape is " + shape_str(loss.shape()));
    }
    if (loss.is_leaf() || !loss.requires_grad()) {
        throw ContractError("backward: loss was not produced under an active tape");
    }
    // Interior gradients are scratch space for this pass; leaf gradients
    // persist so that repeated backward calls accumulate.
    for (auto& node : nodes_) {
        node.out->grad.assign(node.out->data.size(), 0.0);
    }
    loss.ptr()->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->backward_fn();
    }
}

}  // namespace mlsgan
