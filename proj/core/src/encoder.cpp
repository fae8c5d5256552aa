// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/encoder.hpp"

#include <cmath>
#include <iostream>
#include <string>

namespace lenred {

namespace {

ad::Value init_normal(Rng& rng, std::vector<std::size_t> shape, double stddev) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.gaussian(0.0, stddev);
    return ad::leaf(std::move(shape), std::move(data), true);
}

ad::Value init_const(std::vector<std::size_t> shape, double value) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    return ad::leaf(std::move(shape), std::vector<double>(n, value), true);
}

}  // namespace

void EncoderConfig::validate() const {
    if (num_layers < 1 || hidden_dim < 1 || num_heads < 1 || ffn_dim < 1 || max_len < 1 ||
        num_classes < 1) {
        throw ConfigError("EncoderConfig: all dimensions must be >= 1");
    }
    if (hidden_dim % num_heads != 0) {
        throw ConfigError("EncoderConfig: hidden_dim must be divisible by num_heads");
    }
}

EncoderModel EncoderModel::init(const EncoderConfig& config, Vocabulary vocab, Rng& rng,
                                double init_std) {
    EncoderConfig cfg = config;
    cfg.vocab_size = vocab.size();
    cfg.validate();

    EncoderModel m;
    m.config = cfg;
    m.vocab = std::move(vocab);

    const std::size_t d = cfg.hidden_dim;
    m.token_embedding = init_normal(rng, {cfg.vocab_size, d}, init_std);
    m.position_embedding = init_normal(rng, {cfg.max_len, d}, init_std);
    m.params.add("embeddings.token", m.token_embedding);
    m.params.add("embeddings.position", m.position_embedding);

    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        BlockParams b;
        b.wq = init_normal(rng, {d, d}, init_std);
        b.bq = init_const({d}, 0.0);
        b.wk = init_normal(rng, {d, d}, init_std);
        b.wv = init_normal(rng, {d, d}, init_std);
        b.bv = init_const({d}, 0.0);
        b.wo = init_normal(rng, {d, d}, init_std);
        b.bo = init_const({d}, 0.0);
        b.ln_attn_gain = init_const({d}, 1.0);
        b.ln_attn_bias = init_const({d}, 0.0);
        b.ff1_w = init_normal(rng, {d, cfg.ffn_dim}, init_std);
        b.ff1_b = init_const({cfg.ffn_dim}, 0.0);
        b.ff2_w = init_normal(rng, {cfg.ffn_dim, d}, init_std);
        b.ff2_b = init_const({d}, 0.0);
        b.ln_ffn_gain = init_const({d}, 1.0);
        b.ln_ffn_bias = init_const({d}, 0.0);

        const std::string p = "block" + std::to_string(l) + ".";
        m.params.add(p + "attn.wq", b.wq);
        m.params.add(p + "attn.bq", b.bq);
        m.params.add(p + "attn.wk", b.wk);
        m.params.add(p + "attn.wv", b.wv);
        m.params.add(p + "attn.bv", b.bv);
        m.params.add(p + "attn.wo", b.wo);
        m.params.add(p + "attn.bo", b.bo);
        m.params.add(p + "ln_attn.gain", b.ln_attn_gain);
        m.params.add(p + "ln_attn.bias", b.ln_attn_bias);
        m.params.add(p + "ffn.w1", b.ff1_w);
        m.params.add(p + "ffn.b1", b.ff1_b);
        m.params.add(p + "ffn.w2", b.ff2_w);
        m.params.add(p + "ffn.b2", b.ff2_b);
        m.params.add(p + "ln_ffn.gain", b.ln_ffn_gain);
        m.params.add(p + "ln_ffn.bias", b.ln_ffn_bias);
        m.blocks.push_back(std::move(b));
    }

    m.classifier_w = init_normal(rng, {d, cfg.num_classes}, init_std);
    m.classifier_b = init_const({cfg.num_classes}, 0.0);
    m.params.add("classifier.w", m.classifier_w);
    m.params.add("classifier.b", m.classifier_b);
    return m;
}

ad::Value EncoderModel::embed(const std::vector<int>& ids) const {
    if (ids.empty()) throw UsageError("embed: empty token sequence");
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    return ad::add(ad::embed_rows(token_embedding, ids),
                   ad::embed_rows(position_embedding, positions));
}

EncoderModel::BlockOut EncoderModel::block_forward(std::size_t layer, const ad::Value& h,
                                                   const ad::Value& mask) const {
    if (layer >= blocks.size()) throw UsageError("block_forward: layer out of range");
    if (h->shape.size() != 2 || h->shape[0] == 0) {
        throw UsageError("block_forward: hidden state must be [n,d] with n >= 1");
    }
    const BlockParams& b = blocks[layer];
    const std::size_t dh = config.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    const auto q = ad::linear(h, b.wq, b.bq);
    const auto k = ad::matmul(h, b.wk);
    const auto v = ad::linear(h, b.wv, b.bv);

    std::vector<ad::Value> contexts, alphas;
    for (std::size_t head = 0; head < config.num_heads; ++head) {
        const auto qh = ad::slice_cols(q, head * dh, dh);
        const auto kh = ad::slice_cols(k, head * dh, dh);
        const auto vh = ad::slice_cols(v, head * dh, dh);
        auto scores = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt_dh);
        scores = ad::add(scores, mask);  // mask[j] biases column j in every row
        const auto alpha = ad::softmax_rows(scores);
        alphas.push_back(alpha);
        contexts.push_back(ad::matmul(alpha, vh));
    }

    const auto attn_out = ad::linear(ad::concat_cols(contexts), b.wo, b.bo);
    const auto h_attn = ad::layer_norm(ad::add(h, attn_out), b.ln_attn_gain, b.ln_attn_bias);
    const auto ffn = ad::linear(ad::gelu(ad::linear(h_attn, b.ff1_w, b.ff1_b)), b.ff2_w, b.ff2_b);
    const auto h_out = ad::layer_norm(ad::add(h_attn, ffn), b.ln_ffn_gain, b.ln_ffn_bias);
    return {h_out, std::move(alphas)};
}

ad::Value EncoderModel::classify(const ad::Value& h_last) const {
    return ad::linear(ad::row(h_last, 0), classifier_w, classifier_b);
}

EncoderState EncoderModel::encode(const std::vector<int>& ids, const ad::Value& mask) const {
    std::vector<int> tokens = ids;
    if (tokens.size() > config.max_len) {
        std::cerr << "warning: encode: truncating " << tokens.size() << " tokens to max_len="
                  << config.max_len << "\n";
        tokens.resize(config.max_len);
    }
    if (mask->shape != std::vector<std::size_t>{tokens.size()}) {
        throw ConfigError("encode: mask length must equal token count");
    }
    EncoderState state;
    state.mask = mask;
    state.hidden.push_back(embed(tokens));
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        auto out = block_forward(l, state.hidden.back(), mask);
        state.hidden.push_back(out.h);
        state.attention.push_back(std::move(out.attention));
    }
    state.logits = classify(state.hidden.back());
    return state;
}

EncoderState EncoderModel::encode(const std::vector<int>& ids) const {
    const std::size_t n = std::min(ids.size(), config.max_len);
    return encode(ids, ad::zeros({n}));
}

}  // namespace lenred
