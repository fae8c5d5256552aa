// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lenred/inference.hpp"

namespace lenred {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

double mask_expected_length(const std::vector<ad::Value>& masks) {
    double total = 0.0;
    for (const auto& m : masks) {
        for (const double v : m->data) total += std::exp(v);
    }
    return total;
}

}  // namespace

std::vector<Example> prepare_examples(const std::vector<DatasetRecord>& records,
                                      const Vocabulary& vocab, std::size_t max_len) {
    std::vector<Example> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back({r.id, vocab.encode(r.text, max_len), r.label});
    }
    return out;
}

MaskedForwardResult masked_forward(const AdaptiveModel& model, const std::vector<int>& tokens,
                                   double lambda, double beta) {
    const std::size_t n = tokens.size();
    if (n == 0) throw UsageError("masked_forward: empty token sequence");

    MaskedForwardResult result;
    ad::Value h = model.encoder.embed(tokens);
    ad::Value mask = ad::zeros({n});
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const ad::Value raw_scores = predict_contributions(model.cps[l], h, mask);
        const ad::Value dummy = ad::index(model.cls_dummy, l);
        const ad::Value contribution = cls_renorm(raw_scores, dummy);
        const ad::Value eta = ad::sigmoid(ad::index(model.raw_threshold, l));
        const ad::Value cutoff = ad::scale(eta, 1.0 / static_cast<double>(n));
        const ad::Value increment = soft_removal(contribution, cutoff, lambda, beta);
        mask = ad::add(mask, increment);

        result.contributions.push_back(contribution);
        result.masks.push_back(mask);
        h = model.encoder.block_forward(l, h, mask).h;
    }
    result.logits = model.encoder.classify(h);
    return result;
}

ad::Value cp_distillation_loss(const AdaptiveModel& model,
                               const std::vector<ad::Value>& contributions,
                               const std::vector<double>& saliency) {
    const std::size_t layers = model.num_layers();
    if (contributions.size() != layers) {
        throw UsageError("cp_distillation_loss: one contribution distribution per layer expected");
    }
    ad::Value total;
    for (std::size_t l = 0; l < layers; ++l) {
        if (saliency.size() != contributions[l]->size()) {
            throw ConfigError("cp_distillation_loss: saliency length does not match sequence");
        }
        const ad::Value target =
            ad::leaf({saliency.size()}, amplified_target(saliency, model.amplify(l)), false);
        const double weight = static_cast<double>(layers - l);
        const ad::Value kl = ad::kl_divergence(target, contributions[l]);
        total = total ? ad::add(total, ad::scale(kl, weight)) : ad::scale(kl, weight);
    }
    return total;
}

ad::Value length_loss(const std::vector<ad::Value>& masks) {
    if (masks.empty()) throw UsageError("length_loss: no masks");
    ad::Value total;
    for (const auto& m : masks) {
        const ad::Value layer_sum = ad::sum(ad::exp_(m));
        total = total ? ad::add(total, layer_sum) : layer_sum;
    }
    return total;
}

double plain_accuracy(const EncoderModel& model, const std::vector<Example>& examples) {
    if (examples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& e : examples) {
        ad::Tape tape;
        const EncoderState state = model.encode(e.tokens);
        const auto& logits = state.logits->data;
        const int pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == e.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<FinetuneEpoch> finetune_backbone(
    EncoderModel& model, const std::vector<Example>& train, const std::vector<Example>& dev,
    std::size_t epochs, std::size_t batch_size, double learning_rate, Rng& rng,
    const std::function<void(const FinetuneEpoch&)>& after_epoch) {
    if (train.empty()) throw UsageError("finetune_backbone: empty training set");
    if (batch_size == 0) throw ConfigError("finetune_backbone: batch_size must be >= 1");

    Adam optimizer(learning_rate);
    const auto params = model.params.values();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<FinetuneEpoch> log;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);
            model.params.zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const Example& e = train[order[i]];
                ad::Tape tape;
                const EncoderState state = model.encode(e.tokens);
                const ad::Value loss = ad::cross_entropy(state.logits, e.label);
                epoch_loss += loss->data[0];
                tape.backward(ad::scale(loss, inv));
            }
            optimizer.step(params);
        }
        FinetuneEpoch entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss / static_cast<double>(train.size());
        require_finite(entry.train_loss, "training loss");
        entry.dev_accuracy = plain_accuracy(model, dev);
        log.push_back(entry);
        if (after_epoch) after_epoch(entry);
    }
    return log;
}

void AdaptiveHyperparams::validate() const {
    if (cp_loss_weight < 0.0 || length_loss_weight < 0.0) {
        throw ConfigError("adaptive: loss weights must be >= 0");
    }
    if (batch_size == 0) throw ConfigError("adaptive: batch_size must be >= 1");
    schedule.validate();
}

std::vector<AdaptiveEpochLog> train_adaptive(AdaptiveModel& model,
                                             const std::vector<Example>& train,
                                             const std::vector<Example>& dev,
                                             const SaliencyCache& saliency,
                                             const AdaptiveHyperparams& hyper, Rng& rng) {
    hyper.validate();
    if (train.empty()) throw UsageError("train_adaptive: empty training set");
    for (const auto& e : train) {
        const auto it = saliency.records.find(e.id);
        if (it == saliency.records.end()) {
            throw MissingArtifact("saliency record missing for example " + e.id +
                                  "; run the extract-saliency phase first");
        }
        if (it->second.size() != e.tokens.size()) {
            throw ConfigError("saliency record for " + e.id + " has wrong length");
        }
    }

    const std::size_t layers = model.num_layers();
    Adam main_opt(hyper.learning_rate);
    Adam speedup_opt(hyper.speedup_learning_rate);
    const auto main_values = model.main_params.values();
    const auto speedup_values = model.speedup_params.values();

    const auto zero_all = [&]() {
        model.main_params.zero_grad();
        model.speedup_params.zero_grad();
        model.cls_dummy->zero_grad();
    };

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<AdaptiveEpochLog> log;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const double lambda = hyper.schedule.at_epoch(epoch);
        rng.shuffle(order);
        double sum_ce = 0.0, sum_cp = 0.0, sum_len = 0.0;

        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t end = std::min(order.size(), start + hyper.batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);

            // step A: task + distillation; thresholds and amplification frozen
            zero_all();
            for (std::size_t i = start; i < end; ++i) {
                const Example& e = train[order[i]];
                ad::Tape tape;
                const MaskedForwardResult fwd =
                    masked_forward(model, e.tokens, lambda, hyper.schedule.leak_slope);
                const ad::Value ce = ad::cross_entropy(fwd.logits, e.label);
                const ad::Value cp =
                    cp_distillation_loss(model, fwd.contributions, saliency.records.at(e.id));
                sum_ce += ce->data[0];
                sum_cp += cp->data[0];
                sum_len += mask_expected_length(fwd.masks);
                const ad::Value total =
                    ad::scale(ad::add(ce, ad::scale(cp, hyper.cp_loss_weight)), inv);
                tape.backward(total);
            }
            const std::uint64_t speedup_hash = model.speedup_params.data_hash();
            main_opt.step(main_values);
            if (model.speedup_params.data_hash() != speedup_hash) {
                throw std::logic_error("step A modified threshold/amplification parameters");
            }

            // step B: task + expected length; model and predictors frozen
            zero_all();
            for (std::size_t i = start; i < end; ++i) {
                const Example& e = train[order[i]];
                ad::Tape tape;
                const MaskedForwardResult fwd =
                    masked_forward(model, e.tokens, lambda, hyper.schedule.leak_slope);
                const ad::Value ce = ad::cross_entropy(fwd.logits, e.label);
                const ad::Value len = length_loss(fwd.masks);
                const ad::Value total =
                    ad::scale(ad::add(ce, ad::scale(len, hyper.length_loss_weight)), inv);
                tape.backward(total);
            }
            // route the dummy gradients into the amplification parameters:
            // d loss / d theta ~= (d loss / d dummy) / theta, chained with
            // d theta / d raw = sigmoid(raw)
            if (!model.cls_dummy->grad.empty()) {
                auto& amp_grad = model.raw_amplify->grad_buffer();
                for (std::size_t l = 0; l < layers; ++l) {
                    const double raw = model.raw_amplify->data[l];
                    const double dtheta_draw = 1.0 / (1.0 + std::exp(-raw));
                    amp_grad[l] +=
                        model.cls_dummy->grad[l] / model.amplify(l) * dtheta_draw;
                }
            }
            const std::uint64_t main_hash = model.main_params.data_hash();
            speedup_opt.step(speedup_values);
            if (model.main_params.data_hash() != main_hash) {
                throw std::logic_error("step B modified model/CP parameters");
            }
            for (const double v : model.cls_dummy->data) {
                if (v != 1.0) throw std::logic_error("dummy amplifier drifted from 1");
            }
        }
        zero_all();

        AdaptiveEpochLog entry;
        entry.epoch = epoch;
        entry.lambda = lambda;
        const double inv_n = 1.0 / static_cast<double>(train.size());
        entry.ce = sum_ce * inv_n;
        entry.cp = sum_cp * inv_n;
        entry.length = sum_len * inv_n;
        require_finite(entry.ce, "cross-entropy");
        require_finite(entry.cp, "distillation loss");
        require_finite(entry.length, "length loss");
        for (std::size_t l = 0; l < layers; ++l) {
            entry.thresholds.push_back(model.threshold(l));
            entry.amplifiers.push_back(model.amplify(l));
        }

        std::size_t correct = 0;
        double speedup_sum = 0.0;
        for (const auto& e : dev) {
            const AdaptiveInference inf = infer_adaptive(model, e.tokens);
            if (inf.predicted == e.label) ++correct;
            speedup_sum += trace_flops(model, inf.trace, /*include_cp=*/true).speedup;
        }
        entry.dev_accuracy =
            dev.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(dev.size());
        entry.dev_speedup = dev.empty() ? 1.0 : speedup_sum / static_cast<double>(dev.size());
        log.push_back(entry);
    }
    return log;
}

void save_training_log(const std::string& path, const std::vector<AdaptiveEpochLog>& log) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write training log: " + path);
    os << "epoch lambda ce cp length dev_accuracy dev_speedup";
    if (!log.empty()) {
        for (std::size_t l = 0; l < log[0].thresholds.size(); ++l) os << " eta" << l;
        for (std::size_t l = 0; l < log[0].amplifiers.size(); ++l) os << " theta" << l;
    }
    os << "\n";
    os.precision(10);
    for (const auto& e : log) {
        os << e.epoch << " " << e.lambda << " " << e.ce << " " << e.cp << " " << e.length << " "
           << e.dev_accuracy << " " << e.dev_speedup;
        for (const double t : e.thresholds) os << " " << t;
        for (const double a : e.amplifiers) os << " " << a;
        os << "\n";
    }
}

}  // namespace lenred
