// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "lenred/tensor.hpp"

namespace lenred::ad {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_coord = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    // Same maximum restricted to coordinates with |analytic| + |numeric|
    // above kResolutionFloor. Central differences of a double-precision
    // function carry ~eps*|f|/(2*step) of rounding noise, so coordinates
    // whose true gradient sits below that floor cannot be resolved in a
    // relative sense even when the backward rule is exact.
    double max_rel_error_resolved = 0.0;

    static constexpr double kResolutionFloor = 1e-7;
};

// Central-difference oracle for backward rules. `build` must construct a
// fresh graph over `params` (leaves, requires_grad=true) and return the
// scalar root; it is invoked once under a tape for the analytic gradient
// and twice per coordinate for the numeric one. The reported error per
// coordinate is |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
GradCheckReport finite_difference_check(const std::function<Value()>& build,
                                        const std::vector<Value>& params,
                                        double step);

}  // namespace lenred::ad
