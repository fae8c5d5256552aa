// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fine-tuning and adaptive-length retraining.
//
// Adaptive training alternates two optimization problems per batch:
//   step A: cross-entropy + cp_loss_weight * distillation loss updates
//           the encoder and the contribution predictors; thresholds and
//           amplifications are frozen.
//   step B: cross-entropy + length_loss_weight * expected retained
//           length updates only the thresholds (through the soft-removal
//           cutoff) and the [CLS] amplifications (through the dummy
//           gradient route divided by the current amplification).
// Masking, not removal, is used throughout training so batches with
// mixed shapes never arise; the removal strength grows per epoch.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lenred/contribution.hpp"
#include "lenred/dataset.hpp"
#include "lenred/optim.hpp"
#include "lenred/removal.hpp"
#include "lenred/saliency.hpp"

namespace lenred {

struct Example {
    std::string id;
    std::vector<int> tokens;
    int label = 0;
};

std::vector<Example> prepare_examples(const std::vector<DatasetRecord>& records,
                                      const Vocabulary& vocab, std::size_t max_len);

// Forward pass with per-layer contribution scoring and soft-removal mask
// accumulation. contributions[l] is the layer's score distribution after
// the dummy renormalization (numerically identical to the raw softmax);
// masks[l] is the cumulative mask applied to block l+1.
struct MaskedForwardResult {
    ad::Value logits;
    std::vector<ad::Value> contributions;
    std::vector<ad::Value> masks;
};
MaskedForwardResult masked_forward(const AdaptiveModel& model, const std::vector<int>& tokens,
                                   double lambda, double beta);

// Layer-weighted inclusive KL against the amplified saliency targets:
// sum over layers l of (L - l) * KL(target_l || contributions_l), where
// target_l renormalizes the cached saliency with the layer's current
// amplification.
ad::Value cp_distillation_loss(const AdaptiveModel& model,
                               const std::vector<ad::Value>& contributions,
                               const std::vector<double>& saliency);

// Expected number of retained representations: sum over layers and
// positions of exp(mask).
ad::Value length_loss(const std::vector<ad::Value>& masks);

double plain_accuracy(const EncoderModel& model, const std::vector<Example>& examples);

struct FinetuneEpoch {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
};

std::vector<FinetuneEpoch> finetune_backbone(
    EncoderModel& model, const std::vector<Example>& train, const std::vector<Example>& dev,
    std::size_t epochs, std::size_t batch_size, double learning_rate, Rng& rng,
    const std::function<void(const FinetuneEpoch&)>& after_epoch = nullptr);

struct AdaptiveHyperparams {
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    double learning_rate = 5e-4;
    double speedup_learning_rate = 5e-2;
    double cp_loss_weight = 5e-2;      // emphasis on the distillation term
    double length_loss_weight = 1e-3;  // emphasis on the expected-length term
    SoftRemovalSchedule schedule;

    void validate() const;
};

struct AdaptiveEpochLog {
    std::size_t epoch = 0;
    double lambda = 0.0;
    double ce = 0.0, cp = 0.0, length = 0.0;  // epoch means per example
    double dev_accuracy = 0.0;
    double dev_speedup = 0.0;  // hard adaptive inference, CP overhead included
    std::vector<double> thresholds;   // eta per layer
    std::vector<double> amplifiers;   // theta per layer
};

std::vector<AdaptiveEpochLog> train_adaptive(AdaptiveModel& model,
                                             const std::vector<Example>& train,
                                             const std::vector<Example>& dev,
                                             const SaliencyCache& saliency,
                                             const AdaptiveHyperparams& hyper, Rng& rng);

// Plain-text table, one row per epoch.
void save_training_log(const std::string& path, const std::vector<AdaptiveEpochLog>& log);

}  // namespace lenred
