// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/flops.hpp"

namespace lenred {

double block_flops(const FlopsConfig& c, std::size_t n) {
    if (n == 0) throw UsageError("block_flops: zero sequence length");
    const double nd = static_cast<double>(n);
    const double d = static_cast<double>(c.hidden_dim);
    const double h = static_cast<double>(c.num_heads);
    const double dff = static_cast<double>(c.ffn_dim);
    return 8.0 * nd * d * d + 4.0 * nd * nd * d + 4.0 * nd * d * dff + 5.0 * nd * d +
           3.0 * nd * nd * h;
}

double cp_flops(const FlopsConfig& c, std::size_t n) {
    if (n == 0) throw UsageError("cp_flops: zero sequence length");
    const double nd = static_cast<double>(n);
    const double d = static_cast<double>(c.hidden_dim);
    const double dcp = static_cast<double>(c.cp_hidden_dim);
    return 2.0 * nd * d * dcp + 2.0 * nd * dcp + 3.0 * nd;
}

double embedding_flops(const FlopsConfig& c, std::size_t n) {
    if (n == 0) throw UsageError("embedding_flops: zero sequence length");
    return static_cast<double>(n) * static_cast<double>(c.hidden_dim);
}

double classifier_flops(const FlopsConfig& c) {
    return 2.0 * static_cast<double>(c.hidden_dim) * static_cast<double>(c.num_classes);
}

FlopsReport count_flops(const FlopsConfig& config, const std::vector<std::size_t>& block_lengths,
                        std::size_t original_len, bool include_cp) {
    if (block_lengths.empty()) throw UsageError("count_flops: no layer lengths");
    if (original_len == 0) throw UsageError("count_flops: zero original length");

    FlopsReport report;
    report.embedding = embedding_flops(config, original_len);
    report.classifier = classifier_flops(config);
    report.total = report.embedding + report.classifier;
    for (std::size_t l = 0; l < block_lengths.size(); ++l) {
        const double b = block_flops(config, block_lengths[l]);
        report.per_block.push_back(b);
        report.total += b;
        if (include_cp) {
            const std::size_t scored = l == 0 ? original_len : block_lengths[l - 1];
            const double cp = cp_flops(config, scored);
            report.per_cp.push_back(cp);
            report.total += cp;
        }
    }
    report.baseline_total = report.embedding + report.classifier +
                            static_cast<double>(block_lengths.size()) *
                                block_flops(config, original_len);
    report.speedup = report.baseline_total / report.total;
    return report;
}

}  // namespace lenred
