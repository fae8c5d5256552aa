// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rationale-agreement metrics and speedup bookkeeping. All metrics are
// word-level; token scores are aggregated per word first and [CLS] is
// excluded. Ties in ranking break by original word order, so results
// are deterministic.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "lenred/dataset.hpp"
#include "lenred/inference.hpp"
#include "lenred/saliency.hpp"

namespace lenred {

// Per-layer retained-token counts for a static pruning method, clipped
// elementwise to the input length.
std::vector<std::size_t> clip_retention_config(const std::vector<std::size_t>& config,
                                               std::size_t input_len);

double speedup(double baseline_total_flops, double model_total_flops);

struct ApOutcome {
    bool skipped = false;  // no relevant words: metric undefined
    double ap = 0.0;
};
// AP = mean of precision-at-rank over the ranks of relevant words, with
// words ranked by descending score (ties by original order).
ApOutcome average_precision(const std::vector<double>& word_scores,
                            const std::vector<int>& rationale);

struct FprOutcome {
    double value = 0.0;
    bool degenerate = false;  // no non-rationale words to count against
};
// |selected \ rationale| / |non-rationale words|.
FprOutcome false_positive_rate(const std::vector<bool>& selected_words,
                               const std::vector<int>& rationale);

// Soft scores are normalized to sum to 1 over tokens and binarized at the
// uniform level 1/n; a word is selected when any of its tokens is.
std::vector<bool> binarize_at_uniform(const std::vector<double>& token_scores,
                                      const std::vector<int>& word_of_token);

// Per-layer agreement between each token-selection strategy and the
// human rationale, averaged over the dataset. The adaptive model
// provides CP scores and retention sets; the plain fine-tuned backbone
// provides saliency and the two attention baselines. Layer l compares
// the selector feeding block l (CP l-1) with block l's attention.
struct StrategyAgreement {
    static constexpr std::size_t kCp = 0, kSaliency = 1, kAttention = 2, kRollout = 3;
    static const std::array<const char*, 4>& names();

    std::vector<std::array<double, 4>> mean_ap;   // [layer][strategy]
    std::vector<std::array<double, 4>> mean_fpr;  // [layer][strategy]
    std::size_t examples = 0;
    std::size_t skipped_ap = 0;  // records without a single rationale word
};

StrategyAgreement strategy_comparison(const AdaptiveModel& adaptive,
                                      const EncoderModel& backbone,
                                      const std::vector<DatasetRecord>& records);

}  // namespace lenred
