// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Post-norm transformer encoder classifier with an additive per-key
// attention-mask injection point in every layer. The mask is a length-n
// vector of nonpositive values; entry j is added to attention scores of
// column j in every row before the softmax, so a strongly negative entry
// fades token j out of everyone's context. Classification reads the
// final hidden state of [CLS] (position 0).

#pragma once

#include <vector>

#include "lenred/ops.hpp"
#include "lenred/params.hpp"
#include "lenred/rng.hpp"
#include "lenred/tokenizer.hpp"

namespace lenred {

struct EncoderConfig {
    std::size_t num_layers = 4;
    std::size_t hidden_dim = 32;
    std::size_t num_heads = 2;
    std::size_t ffn_dim = 64;
    std::size_t vocab_size = 0;   // filled from the vocabulary
    std::size_t max_len = 32;
    std::size_t num_classes = 2;

    std::size_t head_dim() const { return hidden_dim / num_heads; }
    void validate() const;
};

struct BlockParams {
    ad::Value wq, bq, wk, wv, bv, wo, bo;  // no key bias: softmax rows are shift-invariant
    ad::Value ln_attn_gain, ln_attn_bias;
    ad::Value ff1_w, ff1_b, ff2_w, ff2_b;
    ad::Value ln_ffn_gain, ln_ffn_bias;
};

// Captured forward pass: hidden states h0..hL, the mask that was applied,
// per-layer per-head attention matrices, and the class logits.
struct EncoderState {
    std::vector<ad::Value> hidden;
    ad::Value mask;
    std::vector<std::vector<ad::Value>> attention;
    ad::Value logits;
};

class EncoderModel {
public:
    EncoderConfig config;
    Vocabulary vocab;

    ad::Value token_embedding;     // [vocab, d]
    ad::Value position_embedding;  // [max_len, d]
    std::vector<BlockParams> blocks;
    ad::Value classifier_w, classifier_b;

    ParamSet params;  // all of the above, in fixed order

    static EncoderModel init(const EncoderConfig& config, Vocabulary vocab, Rng& rng,
                             double init_std = 0.05);

    // Token + learned positional embeddings -> h0 [n, d].
    ad::Value embed(const std::vector<int>& ids) const;

    struct BlockOut {
        ad::Value h;
        std::vector<ad::Value> attention;  // one [n,n] row-stochastic matrix per head
    };
    BlockOut block_forward(std::size_t layer, const ad::Value& h, const ad::Value& mask) const;

    ad::Value classify(const ad::Value& h_last) const;

    EncoderState encode(const std::vector<int>& ids, const ad::Value& mask) const;
    EncoderState encode(const std::vector<int>& ids) const;  // fully open mask
};

}  // namespace lenred
