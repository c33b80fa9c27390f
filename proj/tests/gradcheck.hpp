#ifndef VADB_TESTS_GRADCHECK_HPP
#define VADB_TESTS_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "vadb/nn/tensor.hpp"

namespace vadb::testing {

// Central finite differences against the tape. `forward` must rebuild the
// graph from the current values of `params` and return a scalar tensor.
// Relative error uses a 1e-3 floor so near-zero gradients are compared
// absolutely at 1e-7.
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

inline GradCheckResult gradcheck(
    const std::function<vadb::nn::Tensor()>& forward,
    const std::vector<std::pair<std::string, vadb::nn::Tensor>>& params,
    double step = 1e-4) {
    using vadb::nn::Tensor;
    GradCheckResult result;

    for (auto& [name, p] : params) const_cast<Tensor&>(p).zero_grad();
    Tensor loss = forward();
    loss.backward();

    std::vector<std::vector<double>> analytic;
    for (auto& [name, p] : params) analytic.push_back(p.grad_view());

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi].second;
        auto& vals = p.data();
        for (std::size_t e = 0; e < vals.size(); ++e) {
            const double saved = vals[e];
            vals[e] = saved + step;
            const double up = forward().item();
            vals[e] = saved - step;
            const double down = forward().item();
            vals[e] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[pi].empty() ? 0.0 : analytic[pi][e];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-3});
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst_param = params[pi].first;
                result.worst_index = e;
            }
        }
    }
    return result;
}

}  // namespace vadb::testing

#endif
