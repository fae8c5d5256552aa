// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/evaluation.hpp"

#include <algorithm>
#include <numeric>

namespace lenred {

std::vector<std::size_t> clip_retention_config(const std::vector<std::size_t>& config,
                                               std::size_t input_len) {
    if (input_len < 1) throw UsageError("clip_retention_config: input length must be >= 1");
    std::vector<std::size_t> out;
    out.reserve(config.size());
    for (const std::size_t c : config) out.push_back(std::min(c, input_len));
    return out;
}

double speedup(double baseline_total_flops, double model_total_flops) {
    if (!(baseline_total_flops > 0.0) || !(model_total_flops > 0.0)) {
        throw UsageError("speedup: totals must be positive");
    }
    return baseline_total_flops / model_total_flops;
}

ApOutcome average_precision(const std::vector<double>& word_scores,
                            const std::vector<int>& rationale) {
    if (word_scores.size() != rationale.size()) {
        throw UsageError("average_precision: score/rationale length mismatch");
    }
    const std::size_t relevant =
        static_cast<std::size_t>(std::count(rationale.begin(), rationale.end(), 1));
    if (relevant == 0) return {true, 0.0};

    std::vector<std::size_t> order(word_scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return word_scores[a] > word_scores[b];  // ties keep original word order
    });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (rationale[order[rank]] == 1) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return {false, ap / static_cast<double>(relevant)};
}

FprOutcome false_positive_rate(const std::vector<bool>& selected_words,
                               const std::vector<int>& rationale) {
    if (selected_words.size() != rationale.size()) {
        throw UsageError("false_positive_rate: selection/rationale length mismatch");
    }
    std::size_t false_positives = 0, negatives = 0;
    for (std::size_t w = 0; w < rationale.size(); ++w) {
        if (rationale[w] == 0) {
            ++negatives;
            if (selected_words[w]) ++false_positives;
        }
    }
    if (negatives == 0) return {0.0, true};
    return {static_cast<double>(false_positives) / static_cast<double>(negatives), false};
}

std::vector<bool> binarize_at_uniform(const std::vector<double>& token_scores,
                                      const std::vector<int>& word_of_token) {
    if (token_scores.size() != word_of_token.size()) {
        throw UsageError("binarize_at_uniform: alignment length mismatch");
    }
    int max_word = -1;
    for (const int w : word_of_token) max_word = std::max(max_word, w);
    std::vector<bool> selected(static_cast<std::size_t>(max_word + 1), false);

    double total = 0.0;
    for (const double s : token_scores) total += s;
    if (total <= 0.0) return selected;
    const double uniform = 1.0 / static_cast<double>(token_scores.size());
    for (std::size_t t = 0; t < token_scores.size(); ++t) {
        const int w = word_of_token[t];
        if (w >= 0 && token_scores[t] / total >= uniform) {
            selected[static_cast<std::size_t>(w)] = true;
        }
    }
    return selected;
}

const std::array<const char*, 4>& StrategyAgreement::names() {
    static const std::array<const char*, 4> n = {"cp", "saliency", "attention", "rollout"};
    return n;
}

namespace {

std::vector<int> cls_alignment(std::size_t token_count) {
    std::vector<int> word_of_token(token_count);
    word_of_token[0] = -1;
    for (std::size_t t = 1; t < token_count; ++t) word_of_token[t] = static_cast<int>(t - 1);
    return word_of_token;
}

}  // namespace

StrategyAgreement strategy_comparison(const AdaptiveModel& adaptive,
                                      const EncoderModel& backbone,
                                      const std::vector<DatasetRecord>& records) {
    const std::size_t layers = backbone.config.num_layers;
    StrategyAgreement agg;
    agg.mean_ap.assign(layers, {0.0, 0.0, 0.0, 0.0});
    agg.mean_fpr.assign(layers, {0.0, 0.0, 0.0, 0.0});
    std::size_t ap_records = 0;

    for (const auto& record : records) {
        if (!record.rationale) continue;
        const auto tokens = backbone.vocab.encode(record.text, backbone.config.max_len);
        const std::size_t n = tokens.size();
        if (n < 2) continue;
        const std::size_t word_count = n - 1;  // words surviving truncation
        const std::vector<int> rationale(record.rationale->begin(),
                                         record.rationale->begin() + word_count);
        const auto alignment = cls_alignment(n);
        const bool has_relevant =
            std::count(rationale.begin(), rationale.end(), 1) > 0;

        ++agg.examples;
        if (has_relevant) {
            ++ap_records;
        } else {
            ++agg.skipped_ap;
        }

        // adaptive model: CP scores + physical retention sets
        const auto adaptive_tokens = adaptive.encoder.vocab.encode(record.text,
                                                                   adaptive.encoder.config.max_len);
        if (adaptive_tokens.size() != n) {
            throw UsageError("strategy_comparison: adaptive and backbone tokenizations differ for " +
                             record.id);
        }
        const AdaptiveInference inf = infer_adaptive(adaptive, adaptive_tokens);

        // backbone: saliency (layer-independent) and attention captures
        const SaliencyMap sal =
            compute_saliency(backbone, tokens, static_cast<std::size_t>(record.label));
        EncoderState state;
        {
            ad::Tape tape;
            state = backbone.encode(tokens);
            // detach captured matrices: data-only use below
        }
        const auto head_mean = head_mean_attention(state);
        const auto rollout = rollout_matrices(state);

        const auto sal_words = aggregate_to_words(sal.scores, alignment);
        const auto sal_selected = binarize_at_uniform(sal.scores, alignment);

        for (std::size_t l = 0; l < layers; ++l) {
            // CP feeding block l+1
            const auto cp_words = aggregate_to_words(inf.cp_scores[l], alignment);
            std::vector<bool> cp_selected(word_count, false);
            for (const std::size_t pos : inf.trace.survivors[l]) {
                if (pos > 0) cp_selected[pos - 1] = true;
            }

            std::vector<double> attn(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) attn[j] += head_mean[l][i * n + j];
            const auto attn_words = aggregate_to_words(attn, alignment);
            const auto attn_selected = binarize_at_uniform(attn, alignment);

            const std::vector<double> roll(rollout[l].begin(), rollout[l].begin() + n);
            const auto roll_words = aggregate_to_words(roll, alignment);
            const auto roll_selected = binarize_at_uniform(roll, alignment);

            if (has_relevant) {
                agg.mean_ap[l][StrategyAgreement::kCp] += average_precision(cp_words, rationale).ap;
                agg.mean_ap[l][StrategyAgreement::kSaliency] +=
                    average_precision(sal_words, rationale).ap;
                agg.mean_ap[l][StrategyAgreement::kAttention] +=
                    average_precision(attn_words, rationale).ap;
                agg.mean_ap[l][StrategyAgreement::kRollout] +=
                    average_precision(roll_words, rationale).ap;
            }
            agg.mean_fpr[l][StrategyAgreement::kCp] +=
                false_positive_rate(cp_selected, rationale).value;
            agg.mean_fpr[l][StrategyAgreement::kSaliency] +=
                false_positive_rate(sal_selected, rationale).value;
            agg.mean_fpr[l][StrategyAgreement::kAttention] +=
                false_positive_rate(attn_selected, rationale).value;
            agg.mean_fpr[l][StrategyAgreement::kRollout] +=
                false_positive_rate(roll_selected, rationale).value;
        }
    }

    for (std::size_t l = 0; l < layers; ++l) {
        for (auto& v : agg.mean_ap[l]) v /= std::max<std::size_t>(ap_records, 1);
        for (auto& v : agg.mean_fpr[l]) v /= std::max<std::size_t>(agg.examples, 1);
    }
    return agg;
}

}  // namespace lenred
