// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Soft-removal masking and the [CLS] amplification machinery used by
// adaptive-length training.

#pragma once

#include <cstddef>
#include <vector>

#include "lenred/ops.hpp"

namespace lenred {

// Negative attention-mask increment for one contribution score.
// With cutoff delta in (0,1), strength lambda > 0, leak slope beta:
//
//   score <  delta:  (lambda/delta) * (score - delta) - beta/lambda
//   score >= delta:  (score - 1) * beta / ((1 - delta) * lambda)
//
// The two branches meet at -beta/lambda when score == delta. Below the
// cutoff the slope lambda/delta fades tokens hard; above it the small
// beta slope keeps the gradient alive. As lambda grows the function
// approaches a hard keep/drop step.
double soft_removal_value(double score, double delta, double lambda, double beta);

// Graph version over a score vector; differentiable in the scores and in
// the cutoff. Position 0 ([CLS]) always receives increment 0.
ad::Value soft_removal(const ad::Value& scores, const ad::Value& delta, double lambda,
                       double beta);

// Scales entry 0 of a distribution by `amplifier` and renormalizes:
//   out[0] = a*s[0] / Z,  out[i] = s[i] / Z,  Z = a*s[0] + sum_{i>0} s[i].
// Passing the always-1 dummy leaf as the amplifier reproduces the input
// bit-for-bit while routing a gradient to the dummy; the update applied
// to the real amplification parameter is that gradient divided by the
// parameter's current value (see theta_gradient).
ad::Value cls_renorm(const ad::Value& scores, const ad::Value& amplifier);

// Plain-array version of cls_renorm used to build training targets.
std::vector<double> amplified_target(const std::vector<double>& saliency, double amplifier);

// Closed form of d(renormalized distribution)/d(dummy amplifier) at
// dummy == 1, for a distribution s:
//   dummy[i] = s[0] * ((1 - s[0]) for i==0, -s[i] for i>0)
// Components sum to zero. `applied` is dummy / amplifier, the gradient
// actually routed to the amplification parameter.
struct ThetaGradient {
    std::vector<double> dummy;
    std::vector<double> applied;
};
ThetaGradient theta_gradient(const std::vector<double>& scores, double amplifier);

// Exponential per-epoch strength schedule, capped to avoid overflow.
struct SoftRemovalSchedule {
    double start = 10.0;      // initial strength, > 0
    double growth = 10.0;     // per-epoch multiplier, >= 1 (1 = constant, for ablations)
    double leak_slope = 0.01; // beta, in (0, 0.1)

    static constexpr double kCap = 1e9;

    double at_epoch(std::size_t epoch) const;
    void validate() const;
};

}  // namespace lenred
