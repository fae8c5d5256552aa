// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/contribution.hpp"

#include <cmath>
#include <string>

namespace lenred {

ad::Value predict_contributions(const ContributionPredictor& cp, const ad::Value& h,
                                const ad::Value& mask) {
    if (h->shape.size() != 2 || h->shape[0] == 0) {
        throw UsageError("predict_contributions: hidden state must be [n,d] with n >= 1");
    }
    if (mask->shape != std::vector<std::size_t>{h->shape[0]}) {
        throw ConfigError("predict_contributions: mask length must equal sequence length");
    }
    const auto hidden = ad::tanh_(ad::linear(h, cp.w1, cp.b1));
    const auto logits = ad::reshape(ad::matmul(hidden, cp.w2), {h->shape[0]});
    return ad::softmax_rows(ad::add(logits, mask));
}

namespace {

ad::Value init_normal(Rng& rng, std::vector<std::size_t> shape, double stddev) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.gaussian(0.0, stddev);
    return ad::leaf(std::move(shape), std::move(data), true);
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace

AdaptiveModel AdaptiveModel::init(EncoderModel encoder, std::size_t cp_hidden_dim,
                                  double threshold_init, double amplify_init, Rng& rng) {
    if (threshold_init <= 0.0 || threshold_init >= 1.0) {
        throw ConfigError("AdaptiveModel: threshold_init must lie in (0,1)");
    }
    if (amplify_init <= 1.0) {
        throw ConfigError("AdaptiveModel: amplify_init must be > 1 (1 + softplus parametrization)");
    }
    AdaptiveModel m;
    m.encoder = std::move(encoder);
    m.cp_hidden_dim = cp_hidden_dim;
    const std::size_t d = m.encoder.config.hidden_dim;
    const std::size_t layers = m.encoder.config.num_layers;

    m.main_params.extend(m.encoder.params);
    for (std::size_t l = 0; l < layers; ++l) {
        ContributionPredictor cp;
        cp.w1 = init_normal(rng, {d, cp_hidden_dim}, 0.05);
        cp.b1 = ad::leaf({cp_hidden_dim}, std::vector<double>(cp_hidden_dim, 0.0), true);
        cp.w2 = init_normal(rng, {cp_hidden_dim, 1}, 0.05);
        const std::string p = "cp" + std::to_string(l) + ".";
        m.main_params.add(p + "w1", cp.w1);
        m.main_params.add(p + "b1", cp.b1);
        m.main_params.add(p + "w2", cp.w2);
        m.cps.push_back(std::move(cp));
    }

    m.raw_threshold =
        ad::leaf({layers}, std::vector<double>(layers, logit(threshold_init)), true);
    m.raw_amplify =
        ad::leaf({layers}, std::vector<double>(layers, softplus_inverse(amplify_init - 1.0)), true);
    m.cls_dummy = ad::leaf({layers}, std::vector<double>(layers, 1.0), true);
    m.speedup_params.add("speedup.raw_threshold", m.raw_threshold);
    m.speedup_params.add("speedup.raw_amplify", m.raw_amplify);
    return m;
}

double AdaptiveModel::threshold(std::size_t layer) const {
    return 1.0 / (1.0 + std::exp(-raw_threshold->data.at(layer)));
}

double AdaptiveModel::amplify(std::size_t layer) const {
    const double raw = raw_amplify->data.at(layer);
    return 1.0 + (raw > 30.0 ? raw : std::log1p(std::exp(raw)));
}

}  // namespace lenred
