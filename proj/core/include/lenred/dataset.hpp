// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON dataset records:
//   {"id": "...", "text": "...", "label": 0, "rationale": [0,1,...]}
// `rationale` is optional word-level binary relevance aligned with the
// whitespace words of `text`.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lenred/common.hpp"

namespace lenred {

struct DatasetRecord {
    std::string id;
    std::string text;
    int label = 0;
    std::optional<std::vector<int>> rationale;
};

std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t num_classes);
void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records);

enum class SyntheticTask { kKeywordTopic, kSentimentLexicon };

struct SyntheticSpec {
    SyntheticTask task = SyntheticTask::kKeywordTopic;
    std::size_t train_size = 10000;
    std::size_t dev_size = 1000;
    std::size_t test_size = 2000;
    std::size_t seq_words = 31;     // words per example (token length is +1 for [CLS])
    std::size_t num_classes = 4;    // keyword-topic; sentiment is binary
    std::size_t filler_vocab = 200;

    void validate() const;
};

struct SyntheticDataset {
    std::vector<DatasetRecord> train, dev, test;
};

// Deterministic: a fixed seed yields byte-identical records.
// keyword-topic: every example contains exactly one class-determining
// keyword at a random position; the rationale marks that word.
// sentiment-lexicon: positive and negative lexicon words are scattered
// among fillers (counts never tie); the label is the majority polarity
// and the rationale marks every polarity word.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Keeps only rationale words (upper-bound probe inputs).
std::vector<DatasetRecord> filter_to_rationale(const std::vector<DatasetRecord>& records);

}  // namespace lenred
