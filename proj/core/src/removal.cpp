// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/removal.hpp"

#include <cmath>
#include <string>

namespace lenred {

namespace {

void check_removal_params(double delta, double lambda, double beta) {
    if (!(delta > 0.0) || delta >= 1.0) {
        throw ConfigError("soft_removal: cutoff must lie in (0,1), got " + std::to_string(delta));
    }
    if (!(lambda > 0.0)) throw ConfigError("soft_removal: strength must be positive");
    if (!(beta > 0.0) || beta >= 0.1) {
        throw ConfigError("soft_removal: leak slope must lie in (0, 0.1)");
    }
}

}  // namespace

double soft_removal_value(double score, double delta, double lambda, double beta) {
    check_removal_params(delta, lambda, beta);
    if (score < delta) {
        return (lambda / delta) * (score - delta) - beta / lambda;
    }
    return (score - 1.0) * beta / ((1.0 - delta) * lambda);
}

ad::Value soft_removal(const ad::Value& scores, const ad::Value& delta, double lambda,
                       double beta) {
    if (scores->shape.size() != 1 || scores->shape[0] == 0) {
        throw UsageError("soft_removal: scores must be a nonempty vector");
    }
    if (!delta->is_scalar()) throw ConfigError("soft_removal: cutoff must be a scalar node");
    const double d = delta->data[0];
    check_removal_params(d, lambda, beta);

    const std::size_t n = scores->shape[0];
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        out[i] = soft_removal_value(scores->data[i], d, lambda, beta);
    }
    const bool rg = scores->requires_grad || delta->requires_grad;
    ad::Value r = ad::make_op({n}, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), scores, delta, lambda, beta, n]() {
        const double d = delta->data[0];
        double d_delta = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double g = o->grad[i];
            if (g == 0.0) continue;
            const double s = scores->data[i];
            if (s < d) {
                if (scores->requires_grad) scores->grad_buffer()[i] += g * (lambda / d);
                d_delta += g * (-lambda * s / (d * d));
            } else {
                if (scores->requires_grad) {
                    scores->grad_buffer()[i] += g * (beta / ((1.0 - d) * lambda));
                }
                d_delta += g * ((s - 1.0) * beta / (lambda * (1.0 - d) * (1.0 - d)));
            }
        }
        if (delta->requires_grad) delta->grad_buffer()[0] += d_delta;
    };
    return r;
}

ad::Value cls_renorm(const ad::Value& scores, const ad::Value& amplifier) {
    if (scores->shape.size() != 1 || scores->shape[0] == 0) {
        throw UsageError("cls_renorm: scores must be a nonempty vector");
    }
    if (!amplifier->is_scalar()) throw ConfigError("cls_renorm: amplifier must be a scalar node");
    const std::size_t n = scores->shape[0];
    const double a = amplifier->data[0];
    double rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) rest += scores->data[i];
    const double z = a * scores->data[0] + rest;
    if (!(z > 0.0)) throw NumericError("cls_renorm: nonpositive normalizer");

    std::vector<double> out(n);
    out[0] = a * scores->data[0] / z;
    for (std::size_t i = 1; i < n; ++i) out[i] = scores->data[i] / z;

    const bool rg = scores->requires_grad || amplifier->requires_grad;
    ad::Value r = ad::make_op({n}, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), scores, amplifier, n]() {
        const double a = amplifier->data[0];
        const double s0 = scores->data[0];
        double rest = 0.0;
        for (std::size_t i = 1; i < n; ++i) rest += scores->data[i];
        const double z = a * s0 + rest;
        const double z2 = z * z;
        const double g0 = o->grad[0];
        double tail = 0.0;  // sum_{i>0} g_i * s_i
        for (std::size_t i = 1; i < n; ++i) tail += o->grad[i] * scores->data[i];

        if (scores->requires_grad) {
            auto& gs = scores->grad_buffer();
            gs[0] += a * (g0 * rest - tail) / z2;
            const double common = (g0 * a * s0 + tail) / z2;
            for (std::size_t i = 1; i < n; ++i) gs[i] += o->grad[i] / z - common;
        }
        if (amplifier->requires_grad) {
            amplifier->grad_buffer()[0] += s0 * (g0 * rest - tail) / z2;
        }
    };
    return r;
}

std::vector<double> amplified_target(const std::vector<double>& saliency, double amplifier) {
    if (saliency.empty()) throw UsageError("amplified_target: empty distribution");
    double rest = 0.0;
    for (std::size_t i = 1; i < saliency.size(); ++i) rest += saliency[i];
    const double z = amplifier * saliency[0] + rest;
    if (!(z > 0.0)) throw NumericError("amplified_target: nonpositive normalizer");
    std::vector<double> out(saliency.size());
    out[0] = amplifier * saliency[0] / z;
    for (std::size_t i = 1; i < saliency.size(); ++i) out[i] = saliency[i] / z;
    return out;
}

ThetaGradient theta_gradient(const std::vector<double>& scores, double amplifier) {
    if (amplifier <= 0.0) {
        throw ConfigError("theta_gradient: amplifier must be positive (parametrized to stay >= 1)");
    }
    if (scores.empty()) throw UsageError("theta_gradient: empty distribution");
    ThetaGradient g;
    g.dummy.resize(scores.size());
    g.applied.resize(scores.size());
    const double s0 = scores[0];
    g.dummy[0] = s0 * (1.0 - s0);
    for (std::size_t i = 1; i < scores.size(); ++i) g.dummy[i] = -s0 * scores[i];
    for (std::size_t i = 0; i < scores.size(); ++i) g.applied[i] = g.dummy[i] / amplifier;
    return g;
}

double SoftRemovalSchedule::at_epoch(std::size_t epoch) const {
    validate();
    double lambda = start;
    for (std::size_t e = 0; e < epoch; ++e) {
        lambda *= growth;
        if (lambda >= kCap) return kCap;
    }
    return std::min(lambda, kCap);
}

void SoftRemovalSchedule::validate() const {
    if (!(start > 0.0)) throw ConfigError("removal schedule: start must be > 0");
    if (growth < 1.0) throw ConfigError("removal schedule: growth must be >= 1");
    if (!(leak_slope > 0.0) || leak_slope >= 0.1) {
        throw ConfigError("removal schedule: leak slope must lie in (0, 0.1)");
    }
}

}  // namespace lenred
