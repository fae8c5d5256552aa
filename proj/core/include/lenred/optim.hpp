// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unordered_map>
#include <vector>

#include "lenred/tensor.hpp"

namespace lenred {

// Adam with bias correction. Parameters with an untouched gradient
// buffer are treated as having zero gradient for the step.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ad::Value>& params);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    struct Slot {
        std::vector<double> m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::unordered_map<ad::Node*, Slot> slots_;
};

}  // namespace lenred
