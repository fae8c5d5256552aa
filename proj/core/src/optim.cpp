// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/optim.hpp"

#include <cmath>

namespace lenred {

void Adam::step(const std::vector<ad::Value>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& p : params) {
        Slot& slot = slots_[p.get()];
        if (slot.m.size() != p->size()) {
            slot.m.assign(p->size(), 0.0);
            slot.v.assign(p->size(), 0.0);
        }
        const bool has_grad = p->grad.size() == p->size();
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double g = has_grad ? p->grad[i] : 0.0;
            slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
            slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            p->data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace lenred
