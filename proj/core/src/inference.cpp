// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/inference.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace lenred {

std::vector<std::size_t> RetentionTrace::block_lengths() const {
    std::vector<std::size_t> out;
    out.reserve(survivors.size());
    for (const auto& s : survivors) out.push_back(s.size());
    return out;
}

void RetentionTrace::validate() const {
    const std::vector<std::size_t>* prev = nullptr;
    for (const auto& layer : survivors) {
        if (layer.empty()) throw NumericError("RetentionTrace: empty survivor set");
        if (layer.front() != 0) throw NumericError("RetentionTrace: [CLS] missing from a layer");
        if (!std::is_sorted(layer.begin(), layer.end())) {
            throw NumericError("RetentionTrace: survivors not ascending");
        }
        if (prev && !std::includes(prev->begin(), prev->end(), layer.begin(), layer.end())) {
            throw NumericError("RetentionTrace: survivor sets not nested");
        }
        prev = &layer;
    }
}

std::vector<std::size_t> retention_decision(const std::vector<double>& scores,
                                            double threshold_scale) {
    if (scores.empty()) throw UsageError("retention_decision: empty scores");
    const double cutoff = threshold_scale / static_cast<double>(scores.size());
    std::vector<std::size_t> keep;
    keep.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i == 0 || scores[i] >= cutoff) keep.push_back(i);
    }
    return keep;
}

AdaptiveInference infer_adaptive(const AdaptiveModel& model, const std::vector<int>& ids,
                                 std::optional<double> threshold_override) {
    if (ids.empty()) throw UsageError("infer_adaptive: empty token sequence");
    if (threshold_override && (*threshold_override < 0.0 || *threshold_override > 1.0)) {
        throw ConfigError("infer_adaptive: threshold override must lie in [0,1]");
    }
    std::vector<int> tokens = ids;
    if (tokens.size() > model.encoder.config.max_len) tokens.resize(model.encoder.config.max_len);

    AdaptiveInference result;
    result.trace.original_len = tokens.size();

    ad::Tape tape;
    ad::Value h = model.encoder.embed(tokens);
    std::vector<std::size_t> alive(tokens.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    const std::size_t layers = model.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n = alive.size();
        const ad::Value open_mask = ad::zeros({n});
        const ad::Value contribution = predict_contributions(model.cps[l], h, open_mask);

        std::vector<double> scattered(tokens.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) scattered[alive[i]] = contribution->data[i];
        result.cp_scores.push_back(std::move(scattered));

        const double eta = threshold_override ? *threshold_override : model.threshold(l);
        const std::vector<std::size_t> keep_local = retention_decision(contribution->data, eta);
        if (keep_local.size() < n) {
            h = ad::gather_rows(h, keep_local);
            std::vector<std::size_t> next_alive(keep_local.size());
            for (std::size_t i = 0; i < keep_local.size(); ++i) next_alive[i] = alive[keep_local[i]];
            alive = std::move(next_alive);
        }
        result.trace.survivors.push_back(alive);

        h = model.encoder.block_forward(l, h, ad::zeros({alive.size()})).h;
    }

    const ad::Value logits = model.encoder.classify(h);
    result.logits = logits->data;
    result.predicted = static_cast<int>(
        std::max_element(result.logits.begin(), result.logits.end()) - result.logits.begin());
    return result;
}

FlopsReport trace_flops(const AdaptiveModel& model, const RetentionTrace& trace, bool include_cp) {
    return count_flops(FlopsConfig::from(model.encoder.config, model.cp_hidden_dim),
                       trace.block_lengths(), trace.original_len, include_cp);
}

void save_traces(const std::string& path, const std::vector<std::string>& ids,
                 const std::vector<RetentionTrace>& traces) {
    if (ids.size() != traces.size()) throw UsageError("save_traces: id/trace count mismatch");
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write traces: " + path);
    for (std::size_t e = 0; e < traces.size(); ++e) {
        os << ids[e] << " " << traces[e].original_len;
        for (const auto& layer : traces[e].survivors) {
            os << " ";
            for (std::size_t i = 0; i < layer.size(); ++i) {
                if (i) os << ",";
                os << layer[i];
            }
        }
        os << "\n";
    }
}

std::vector<std::pair<std::string, RetentionTrace>> load_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("trace dump not found: " + path);
    std::vector<std::pair<std::string, RetentionTrace>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        RetentionTrace trace;
        std::string id, field;
        ss >> id >> trace.original_len;
        while (ss >> field) {
            std::vector<std::size_t> layer;
            std::size_t pos = 0;
            while (pos < field.size()) {
                std::size_t comma = field.find(',', pos);
                if (comma == std::string::npos) comma = field.size();
                layer.push_back(std::strtoull(field.substr(pos, comma - pos).c_str(), nullptr, 10));
                pos = comma + 1;
            }
            trace.survivors.push_back(std::move(layer));
        }
        out.emplace_back(std::move(id), std::move(trace));
    }
    return out;
}

}  // namespace lenred
