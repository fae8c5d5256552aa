// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/grad_check.hpp"

#include <cmath>

namespace lenred::ad {

GradCheckReport finite_difference_check(const std::function<Value()>& build,
                                        const std::vector<Value>& params,
                                        double step) {
    if (step <= 0.0) throw UsageError("finite_difference_check: step must be positive");

    for (const auto& p : params) p->zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Value root = build();
        tape.backward(root);
    }
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(p->grad.empty() ? std::vector<double>(p->size(), 0.0) : p->grad);
    }

    const auto eval = [&]() {
        Tape tape;
        return build()->data[0];
    };

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& data = params[pi]->data;
        for (std::size_t ci = 0; ci < data.size(); ++ci) {
            const double saved = data[ci];
            data[ci] = saved + step;
            const double hi = eval();
            data[ci] = saved - step;
            const double lo = eval();
            data[ci] = saved;
            const double numeric = (hi - lo) / (2.0 * step);
            const double a = analytic[pi][ci];
            const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = pi;
                report.worst_coord = ci;
                report.analytic = a;
                report.numeric = numeric;
            }
            if (std::abs(a) + std::abs(numeric) > GradCheckReport::kResolutionFloor &&
                err > report.max_rel_error_resolved) {
                report.max_rel_error_resolved = err;
            }
        }
    }
    for (const auto& p : params) p->zero_grad();
    return report;
}

}  // namespace lenred::ad
