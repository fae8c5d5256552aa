// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-layer contribution predictors: a small MLP scores each token's
// hidden state and a softmax over positions turns the scores into a
// distribution. The cumulative attention mask is added to the logits
// before the softmax so already-faded tokens receive vanishing scores,
// keeping the training-time support aligned with the physically reduced
// sequence seen at inference.

#pragma once

#include <vector>

#include "lenred/encoder.hpp"

namespace lenred {

struct ContributionPredictor {
    ad::Value w1, b1;  // [d, d_cp], [d_cp]
    ad::Value w2;      // [d_cp, 1]; no bias: a uniform logit shift cancels in the softmax
};

// MLP(tanh) logit per position + mask, softmax over positions -> [n].
ad::Value predict_contributions(const ContributionPredictor& cp, const ad::Value& h,
                                const ad::Value& mask);

// Encoder + one CP per layer + the trainable speedup parameters.
//
// Per layer l: the retention threshold scale eta^l = sigmoid(raw_threshold[l])
// lives in (0,1); the [CLS] amplification theta^l = 1 + softplus(raw_amplify[l])
// stays >= 1. cls_dummy is pinned at exactly 1 and exists only so the
// amplification receives a gradient through the graph (see removal.hpp).
struct AdaptiveModel {
    EncoderModel encoder;
    std::size_t cp_hidden_dim = 0;
    std::vector<ContributionPredictor> cps;

    ad::Value raw_threshold;  // [L]
    ad::Value raw_amplify;    // [L]
    ad::Value cls_dummy;      // [L], identically 1

    ParamSet main_params;     // encoder + all CPs (step A)
    ParamSet speedup_params;  // raw_threshold, raw_amplify (step B)

    static AdaptiveModel init(EncoderModel encoder, std::size_t cp_hidden_dim,
                              double threshold_init, double amplify_init, Rng& rng);

    std::size_t num_layers() const { return encoder.config.num_layers; }
    double threshold(std::size_t layer) const;  // eta^l in (0,1)
    double amplify(std::size_t layer) const;    // theta^l >= 1
};

}  // namespace lenred
