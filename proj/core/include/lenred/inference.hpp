// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-instance adaptive inference. Before each encoder block, the
// layer's contribution predictor scores the surviving tokens; tokens
// whose score falls below the layer cutoff (threshold_scale / current
// length) are physically removed. Comparison is >=, so a perfectly
// uniform distribution at threshold scale 1 retains everything. [CLS]
// survives every layer regardless of its score.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lenred/contribution.hpp"
#include "lenred/flops.hpp"

namespace lenred {

struct RetentionTrace {
    std::size_t original_len = 0;
    // survivors[l]: original token positions entering block l+1, ascending
    std::vector<std::vector<std::size_t>> survivors;

    std::vector<std::size_t> block_lengths() const;
    void validate() const;  // nesting, [CLS] everywhere, nonempty layers
};

struct AdaptiveInference {
    std::vector<double> logits;
    int predicted = -1;
    RetentionTrace trace;
    // Per predictor, contribution scores scattered back to original
    // positions; dropped positions hold 0.
    std::vector<std::vector<double>> cp_scores;
};

// Local indices kept for one layer: position 0 plus every position whose
// score is >= threshold_scale / scores.size().
std::vector<std::size_t> retention_decision(const std::vector<double>& scores,
                                            double threshold_scale);

AdaptiveInference infer_adaptive(const AdaptiveModel& model, const std::vector<int>& ids,
                                 std::optional<double> threshold_override = std::nullopt);

FlopsReport trace_flops(const AdaptiveModel& model, const RetentionTrace& trace, bool include_cp);

// Trace dump: one example per line,
//   <id> <original_len> <comma-joined survivors of block 1> ... <block L>
void save_traces(const std::string& path, const std::vector<std::string>& ids,
                 const std::vector<RetentionTrace>& traces);
std::vector<std::pair<std::string, RetentionTrace>> load_traces(const std::string& path);

}  // namespace lenred
