// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient-times-input token attribution and attention-based comparison
// scores. A saliency map is computed with one backward pass from a class
// logit down to the embedding output: per token, the L2 norm of
// (d logit / d embedding) elementwise-multiplied with the embedding.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lenred/encoder.hpp"

namespace lenred {

struct SaliencyMap {
    std::vector<double> scores;  // per token, nonnegative
    bool normalized = false;     // when set, scores sum to 1
    int class_index = -1;
    bool degenerate = false;     // all-zero raw scores were replaced by uniform
};

// Per-token L2 norms of gradient (x) input over the feature axis; the raw
// (unnormalized) scores behind a saliency map.
std::vector<double> gradient_input_norms(const std::vector<double>& data,
                                         const std::vector<double>& grad, std::size_t tokens,
                                         std::size_t dim);

// One backward pass from logits[class_index]; leaves model parameter
// gradients zeroed. Degenerate all-zero maps become uniform with a warning.
SaliencyMap compute_saliency(const EncoderModel& model, const std::vector<int>& ids,
                             std::size_t class_index);

// Arithmetic mean of normalized maps, renormalized.
SaliencyMap average_maps(const std::vector<SaliencyMap>& maps);

// average_maps over per-checkpoint saliency of the same example.
SaliencyMap average_checkpoint_saliencies(const std::vector<const EncoderModel*>& pool,
                                          const std::vector<int>& ids, std::size_t class_index);

// Word score = sum of its tokens' scores; token 0 ([CLS]) is excluded.
// word_of_token[t] is the word index of token t, or -1 for [CLS].
std::vector<double> aggregate_to_words(const std::vector<double>& token_scores,
                                       const std::vector<int>& word_of_token);

// Head-averaged attention matrix per block, flattened row-major [n*n].
std::vector<std::vector<double>> head_mean_attention(const EncoderState& state);

// Cumulative residual-mixed attention: per block, the head mean is mixed
// with identity (0.5 A + 0.5 I), row-renormalized, and left-multiplied
// onto the product of the earlier blocks. Entry l is the aggregate up to
// block l+1.
std::vector<std::vector<double>> rollout_matrices(const EncoderState& state);

enum class AttentionStrategy {
    kRollout,       // [CLS] row of the cumulative rollout matrix
    kAccumulate,    // column sums of the raw head-mean matrix at the block
    kClsAttention,  // [CLS] row of the raw head-mean matrix at the block
};

// Per-token scores from a captured forward pass; `block` is 1-based.
std::vector<double> attention_scores(const EncoderState& state, AttentionStrategy strategy,
                                     std::size_t block);

// On-disk saliency cache: one normalized score vector per example id,
// keyed to the checkpoint pool that produced it.
//
//   lenred-saliency-cache v1
//   pool_hash <hex>
//   <id> <n> <hex doubles...>
struct SaliencyCache {
    std::uint64_t pool_hash = 0;
    std::map<std::string, std::vector<double>> records;  // ordered for stable files
};

void save_saliency_cache(const std::string& path, const SaliencyCache& cache);
SaliencyCache load_saliency_cache(const std::string& path);

}  // namespace lenred
