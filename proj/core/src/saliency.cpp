// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/saliency.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lenred {

std::vector<double> gradient_input_norms(const std::vector<double>& data,
                                         const std::vector<double>& grad, std::size_t tokens,
                                         std::size_t dim) {
    if (data.size() != tokens * dim || grad.size() != tokens * dim) {
        throw UsageError("gradient_input_norms: buffer sizes do not match tokens*dim");
    }
    std::vector<double> norms(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = grad[i * dim + j] * data[i * dim + j];
            acc += v * v;
        }
        norms[i] = std::sqrt(acc);
    }
    return norms;
}

SaliencyMap compute_saliency(const EncoderModel& model, const std::vector<int>& ids,
                             std::size_t class_index) {
    SaliencyMap map;
    map.class_index = static_cast<int>(class_index);
    {
        ad::Tape tape;
        EncoderState state = model.encode(ids);
        const ad::Value h0 = state.hidden[0];
        tape.backward(ad::index(state.logits, class_index));
        map.scores =
            gradient_input_norms(h0->data, h0->grad_buffer(), h0->shape[0], h0->shape[1]);
    }
    model.params.zero_grad();

    double total = 0.0;
    for (const double s : map.scores) total += s;
    if (total <= 0.0) {
        std::cerr << "warning: all-zero saliency map, returning uniform distribution\n";
        map.degenerate = true;
        const double u = 1.0 / static_cast<double>(map.scores.size());
        for (auto& s : map.scores) s = u;
    } else {
        for (auto& s : map.scores) s /= total;
    }
    map.normalized = true;
    return map;
}

SaliencyMap average_maps(const std::vector<SaliencyMap>& maps) {
    if (maps.empty()) throw UsageError("average_maps: no maps");
    SaliencyMap mean;
    mean.class_index = maps.front().class_index;
    mean.scores.assign(maps.front().scores.size(), 0.0);
    for (const auto& map : maps) {
        if (!map.normalized) throw UsageError("average_maps: inputs must be normalized");
        if (map.scores.size() != mean.scores.size()) {
            throw UsageError("average_maps: inconsistent lengths");
        }
        for (std::size_t i = 0; i < mean.scores.size(); ++i) mean.scores[i] += map.scores[i];
        mean.degenerate = mean.degenerate || map.degenerate;
    }
    double total = 0.0;
    for (const double s : mean.scores) total += s;
    for (auto& s : mean.scores) s /= total;
    mean.normalized = true;
    return mean;
}

SaliencyMap average_checkpoint_saliencies(const std::vector<const EncoderModel*>& pool,
                                          const std::vector<int>& ids,
                                          std::size_t class_index) {
    if (pool.empty()) throw UsageError("average_checkpoint_saliencies: empty checkpoint pool");
    std::vector<SaliencyMap> maps;
    maps.reserve(pool.size());
    for (const EncoderModel* model : pool) {
        maps.push_back(compute_saliency(*model, ids, class_index));
    }
    return average_maps(maps);
}

std::vector<double> aggregate_to_words(const std::vector<double>& token_scores,
                                       const std::vector<int>& word_of_token) {
    if (token_scores.size() != word_of_token.size()) {
        throw UsageError("aggregate_to_words: alignment length mismatch");
    }
    int max_word = -1;
    for (const int w : word_of_token) max_word = std::max(max_word, w);
    std::vector<double> words(static_cast<std::size_t>(max_word + 1), 0.0);
    for (std::size_t t = 0; t < token_scores.size(); ++t) {
        const int w = word_of_token[t];
        if (w < 0) {
            if (t != 0) throw UsageError("aggregate_to_words: unaligned non-[CLS] token");
            continue;  // [CLS]
        }
        words[static_cast<std::size_t>(w)] += token_scores[t];
    }
    return words;
}

std::vector<std::vector<double>> head_mean_attention(const EncoderState& state) {
    std::vector<std::vector<double>> out;
    for (const auto& heads : state.attention) {
        const std::size_t n = heads[0]->shape[0];
        std::vector<double> mean(n * n, 0.0);
        for (const auto& alpha : heads) {
            for (std::size_t i = 0; i < n * n; ++i) mean[i] += alpha->data[i];
        }
        const double inv = 1.0 / static_cast<double>(heads.size());
        for (auto& v : mean) v *= inv;
        out.push_back(std::move(mean));
    }
    return out;
}

std::vector<std::vector<double>> rollout_matrices(const EncoderState& state) {
    const auto per_block = head_mean_attention(state);
    std::vector<std::vector<double>> out;
    std::vector<double> cumulative;
    for (const auto& mean : per_block) {
        const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(mean.size()))));
        // residual mixing, then row renormalization
        std::vector<double> mixed(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                mixed[i * n + j] = 0.5 * mean[i * n + j] + (i == j ? 0.5 : 0.0);
                row_sum += mixed[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) mixed[i * n + j] /= row_sum;
        }
        if (cumulative.empty()) {
            cumulative = mixed;
        } else {
            std::vector<double> next(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < n; ++p) {
                    const double v = mixed[i * n + p];
                    for (std::size_t j = 0; j < n; ++j) next[i * n + j] += v * cumulative[p * n + j];
                }
            }
            cumulative = std::move(next);
        }
        out.push_back(cumulative);
    }
    return out;
}

std::vector<double> attention_scores(const EncoderState& state, AttentionStrategy strategy,
                                     std::size_t block) {
    if (block < 1 || block > state.attention.size()) {
        throw UsageError("attention_scores: block out of range");
    }
    const std::size_t li = block - 1;
    switch (strategy) {
        case AttentionStrategy::kRollout: {
            const auto rollout = rollout_matrices(state);
            const auto& m = rollout[li];
            const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(m.size()))));
            return std::vector<double>(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n));
        }
        case AttentionStrategy::kAccumulate: {
            const auto mean = head_mean_attention(state)[li];
            const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(mean.size()))));
            std::vector<double> cols(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) cols[j] += mean[i * n + j];
            return cols;
        }
        case AttentionStrategy::kClsAttention: {
            const auto mean = head_mean_attention(state)[li];
            const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(mean.size()))));
            return std::vector<double>(mean.begin(), mean.begin() + static_cast<std::ptrdiff_t>(n));
        }
    }
    throw UsageError("attention_scores: unknown strategy");
}

void save_saliency_cache(const std::string& path, const SaliencyCache& cache) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write saliency cache: " + path);
    char buf[40];
    os << "lenred-saliency-cache v1\n";
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(cache.pool_hash));
    os << "pool_hash " << buf << "\n";
    for (const auto& [id, scores] : cache.records) {
        os << id << " " << scores.size();
        for (const double s : scores) {
            std::snprintf(buf, sizeof(buf), "%a", s);
            os << " " << buf;
        }
        os << "\n";
    }
}

SaliencyCache load_saliency_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("saliency cache not found: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "lenred-saliency-cache v1") {
        throw ConfigError("saliency cache " + path + ": bad header");
    }
    SaliencyCache cache;
    if (!std::getline(in, line) || line.rfind("pool_hash ", 0) != 0) {
        throw ConfigError("saliency cache " + path + ": missing pool_hash");
    }
    cache.pool_hash = std::strtoull(line.substr(10).c_str(), nullptr, 16);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id;
        std::size_t n = 0;
        ss >> id >> n;
        std::vector<double> scores(n);
        std::string tok;
        for (auto& s : scores) {
            if (!(ss >> tok)) throw ConfigError("saliency cache " + path + ": short record " + id);
            s = std::strtod(tok.c_str(), nullptr);
        }
        cache.records.emplace(std::move(id), std::move(scores));
    }
    return cache;
}

}  // namespace lenred
