#include "mlsgan/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mlsgan {

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    for (const ParamCheck& p : params) {
        os << (p.passed ? "ok  " : "FAIL") << "  " << p.name << "  max_rel_error=" << p.max_rel_error;
        if (p.worst_index >= 0) os << " (element " << p.worst_index << ")";
        os << "\n";
    }
    return os.str();
}

GradCheckReport finite_diff_check(const std::function<Tensor()>& f, std::span<const Tensor> params,
                                  double epsilon, double tolerance) {
    if (!(epsilon > 0.0) || epsilon > 1e-2) {
        throw ContractError("finite_diff_check: epsilon must be in (0, 1e-2]");
    }

    std::vector<std::vector<double>> analytic;
    {
        for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
        Tape tape;
        Tensor loss = f();
        if (loss.numel() != 1) {
            throw ContractError("finite_diff_check: f must return a scalar");
        }
        tape.backward(loss);
        for (const Tensor& p : params) {
            analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(static_cast<std::size_t>(p.numel()), 0.0));
        }
        for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    }

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        ParamCheck check;
        check.name = p.name().empty() ? "param" + std::to_string(pi) : p.name();
        for (int i = 0; i < p.numel(); ++i) {
            double& slot = p.data()[static_cast<std::size_t>(i)];
            const double orig = slot;
            const double h = epsilon * std::max(1.0, std::abs(orig));
            slot = orig + h;
            const double f_plus = f().value();
            slot = orig - h;
            const double f_minus = f().value();
            slot = orig;
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = analytic[pi][static_cast<std::size_t>(i)];
            const double mag = std::max(std::abs(a), std::abs(numeric));
            // Floor keeps finite-difference roundoff on near-zero gradients
            // from dominating the ratio.
            const double rel = mag < 1e-12 ? 0.0 : std::abs(a - numeric) / std::max(mag, 1e-4);
            if (rel > check.max_rel_error) {
                check.max_rel_error = rel;
                check.worst_index = i;
            }
        }
        check.passed = check.max_rel_error < tolerance;
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.passed = report.passed && check.passed;
        report.params.push_back(std::move(check));
    }
    return report;
}

}  // namespace mlsgan
