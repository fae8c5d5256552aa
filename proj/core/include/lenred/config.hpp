// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. Parsing is strict: unknown keys anywhere in the
// file are rejected, and every range constraint is checked before any
// phase starts.

#pragma once

#include <optional>
#include <string>

#include "lenred/dataset.hpp"
#include "lenred/encoder.hpp"
#include "lenred/training.hpp"

namespace lenred {

struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "runs/out";

    struct Data {
        std::string train, dev, test;
    } data;

    EncoderConfig model;  // vocab_size is filled from the corpus at finetune time
    std::size_t cp_hidden_dim = 16;

    std::optional<SyntheticSpec> synthetic;

    struct Finetune {
        std::size_t epochs = 3;
        std::size_t batch_size = 32;
        double learning_rate = 1e-3;
        std::size_t checkpoint_pool = 3;
    } finetune;

    AdaptiveHyperparams adaptive;
    double threshold_init = 0.5;  // eta at epoch 0
    double amplify_init = 1.01;   // theta at epoch 0 (1 + softplus keeps it > 1)

    struct Flops {
        bool include_cp = true;
        std::vector<std::size_t> static_retention;  // optional static-pruning comparison
    } flops;

    static RunConfig load(const std::string& path);
    void validate() const;
};

}  // namespace lenred
