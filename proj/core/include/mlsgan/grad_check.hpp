#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlsgan/tensor.hpp"

namespace mlsgan {

struct ParamCheck {
    std::string name;
    double max_rel_error = 0.0;
    int worst_index = -1;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<ParamCheck> params;
    double max_rel_error = 0.0;
    bool passed = true;

    std::string summary() const;
};

/// Compares the tape gradient of the scalar function `f` against central
/// finite differences (f(p+e) - f(p-e)) / 2e for every element of every
/// parameter. `f` must be deterministic and must not itself open a tape.
/// The analytic pass runs under a fresh tape; the difference passes run
/// with no tape active, so the two routes share no gradient code.
GradCheckReport finite_diff_check(const std::function<Tensor()>& f, std::span<const Tensor> params,
                                  double epsilon = 1e-5, double tolerance = 1e-5);

}  // namespace mlsgan
