// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact FLOPs accounting. The counting rules are frozen so reports are
// reproducible bit-for-bit; one multiply-accumulate counts as 2 FLOPs.
//
// Per encoder block at sequence length n (hidden d, heads H, FFN d_ff):
//   QKV + output projections: 8 n d^2
//   attention scores+context: 4 n^2 d
//   feed-forward:             4 n d d_ff
//   layer norms:              5 n d
//   attention softmax:        3 n^2 H
//
// Contribution predictor at length n (hidden d_cp):
//   2 n d d_cp + 2 n d_cp + 3 n
//
// Counted once per example: embedding add (n d) and the classifier head
// (2 d num_classes). The baseline runs every block at the original
// length with no predictor overhead.

#pragma once

#include <cstddef>
#include <vector>

#include "lenred/encoder.hpp"

namespace lenred {

struct FlopsConfig {
    std::size_t hidden_dim = 0;
    std::size_t num_heads = 0;
    std::size_t ffn_dim = 0;
    std::size_t num_classes = 0;
    std::size_t cp_hidden_dim = 0;

    static FlopsConfig from(const EncoderConfig& c, std::size_t cp_hidden_dim) {
        return {c.hidden_dim, c.num_heads, c.ffn_dim, c.num_classes, cp_hidden_dim};
    }
};

double block_flops(const FlopsConfig& c, std::size_t n);
double cp_flops(const FlopsConfig& c, std::size_t n);
double embedding_flops(const FlopsConfig& c, std::size_t n);
double classifier_flops(const FlopsConfig& c);

struct FlopsReport {
    std::vector<double> per_block;  // block l at its reduced length
    std::vector<double> per_cp;     // predictor l at the length it scored
    double embedding = 0.0;
    double classifier = 0.0;
    double total = 0.0;           // embedding + blocks + classifier (+ CP when included)
    double baseline_total = 0.0;  // all blocks at the original length, no CP
    double speedup = 0.0;         // baseline_total / total
};

// block_lengths[l] is the sequence length processed by block l+1 (one
// entry per layer). Predictor l scores the input of block l+1, i.e.
// original_len for l = 0 and block_lengths[l-1] afterwards.
FlopsReport count_flops(const FlopsConfig& config, const std::vector<std::size_t>& block_lengths,
                        std::size_t original_len, bool include_cp);

}  // namespace lenred
