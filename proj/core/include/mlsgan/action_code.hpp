#pragma once

#include <vector>

#include "mlsgan/tensor.hpp"

namespace mlsgan {

/// External-form action code: a length-k vector with components in
/// [0, 255]. The networks operate on the normalized [0, 1] form; the two
/// are related by the exact affine bijection x/255 and 255*x.
struct ActionCode {
    std::vector<double> values;

    int k() const { return static_cast<int>(values.size()); }
};

/// Ground-truth code for a class: 255 at the class index, 0 elsewhere.
ActionCode encode_ground_truth(int class_id, int k);

/// Argmax index of a code; ties break toward the lowest index.
int decode(const ActionCode& code);

/// External [0,255] -> internal [0,1]. Rejects out-of-range components.
std::vector<double> normalize(const ActionCode& code);

/// Internal [0,1] -> external [0,255]. Rejects out-of-range components.
ActionCode denormalize(const std::vector<double>& internal);

/// Internal-form ground-truth code as a [k] tensor (for discriminator
/// "real" inputs).
Tensor ground_truth_internal(int class_id, int k);

}  // namespace mlsgan
