#include "mlsgan/action_code.hpp"

#include <string>

#include "mlsgan/error.hpp"

namespace mlsgan {

ActionCode encode_ground_truth(int class_id, int k) {
    if (k < 1) {
        throw ContractError("encode_ground_truth: k must be >= 1");
    }
    if (class_id < 0 || class_id >= k) {
        throw ContractError("encode_ground_truth: class " + std::to_string(class_id) +
                            " out of range [0," + std::to_string(k) + ")");
    }
    ActionCode code;
    code.values.assign(static_cast<std::size_t>(k), 0.0);
    code.values[static_cast<std::size_t>(class_id)] = 255.0;
    return code;
}

int decode(const ActionCode& code) {
    if (code.values.empty()) {
        throw ContractError("decode: empty action code");
    }
    int best = 0;
    for (int i = 1; i < code.k(); ++i) {
        if (code.values[static_cast<std::size_t>(i)] > code.values[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

std::vector<double> normalize(const ActionCode& code) {
    std::vector<double> internal(code.values.size());
    for (std::size_t i = 0; i < code.values.size(); ++i) {
        const double v = code.values[i];
        if (v < -1e-9 || v > 255.0 + 1e-9) {
            throw ContractError("normalize: component " + std::to_string(v) +
                                " outside [0, 255]");
        }
        internal[i] = v / 255.0;
    }
    return internal;
}

ActionCode denormalize(const std::vector<double>& internal) {
    ActionCode code;
    code.values.resize(internal.size());
    for (std::size_t i = 0; i < internal.size(); ++i) {
        const double v = internal[i];
        if (v < -1e-12 || v > 1.0 + 1e-12) {
            throw ContractError("denormalize: component " + std::to_string(v) +
                                " outside [0, 1]");
        }
        code.values[i] = 255.0 * v;
    }
    return code;
}

Tensor ground_truth_internal(int class_id, int k) {
    return Tensor::from({k}, normalize(encode_ground_truth(class_id, k)));
}

}  // namespace mlsgan
