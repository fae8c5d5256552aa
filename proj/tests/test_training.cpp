// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive-training machinery: masked forward invariants, loss worked
// values, the full-composite gradient check, and the dual-optimizer
// freeze contracts.

#include <cmath>

#include "doctest.h"
#include "lenred/grad_check.hpp"
#include "lenred/training.hpp"

using namespace lenred;

namespace {

AdaptiveModel tiny_adaptive(std::uint64_t seed = 1) {
    EncoderConfig c;
    c.num_layers = 2;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 12;
    c.max_len = 10;
    c.num_classes = 2;
    Rng rng(seed);
    auto backbone = EncoderModel::init(
        c, Vocabulary::build({"good movie", "bad film", "it was fine stuff"}), rng);
    return AdaptiveModel::init(std::move(backbone), 4, 0.5, 1.01, rng);
}

std::vector<double> uniform_saliency(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace

TEST_CASE("predict_contributions worked examples") {
    const auto model = tiny_adaptive();
    const std::size_t d = model.encoder.config.hidden_dim;
    SUBCASE("zero-initialized predictor with open mask is uniform") {
        auto cp = model.cps[0];
        std::fill(cp.w2->data.begin(), cp.w2->data.end(), 0.0);
        ad::Tape tape;
        const auto h = ad::leaf({3, d}, std::vector<double>(3 * d, 0.3));
        const auto out = predict_contributions(cp, h, ad::zeros({3}));
        for (const double v : out->data) CHECK(v == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("a fully masked position gets vanishing score") {
        ad::Tape tape;
        Rng rng(2);
        std::vector<double> h_data(3 * d);
        for (auto& v : h_data) v = rng.uniform(-1.0, 1.0);
        const auto h = ad::leaf({3, d}, h_data);
        const auto out =
            predict_contributions(model.cps[0], h, ad::leaf({3}, {0.0, -10000.0, 0.0}));
        CHECK(out->data[1] <= 1e-4);
        CHECK(out->data[0] + out->data[2] == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("single alive token scores one") {
        ad::Tape tape;
        const auto h = ad::leaf({1, d}, std::vector<double>(d, 0.1));
        const auto out = predict_contributions(model.cps[0], h, ad::zeros({1}));
        CHECK(out->data[0] == doctest::Approx(1.0));
    }
    SUBCASE("distribution is valid for every layer on a real pass") {
        ad::Tape tape;
        const auto ids = model.encoder.vocab.encode("good movie it was", 10);
        const auto fwd = masked_forward(model, ids, 3.0, 0.01);
        for (const auto& contribution : fwd.contributions) {
            double sum = 0.0;
            for (const double v : contribution->data) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
    SUBCASE("permuting non-[CLS] positions permutes scores (positions zeroed)") {
        auto model2 = tiny_adaptive(3);
        auto& pos = model2.encoder.position_embedding->data;
        std::fill(pos.begin(), pos.end(), 0.0);
        const auto ids = model2.encoder.vocab.encode("good movie bad film", 10);
        std::vector<int> permuted = {ids[0], ids[3], ids[1], ids[4], ids[2]};
        ad::Tape tape;
        const auto a = predict_contributions(model2.cps[0], model2.encoder.embed(ids),
                                             ad::zeros({ids.size()}));
        const auto b = predict_contributions(model2.cps[0], model2.encoder.embed(permuted),
                                             ad::zeros({ids.size()}));
        CHECK(a->data[1] == doctest::Approx(b->data[2]).epsilon(1e-12));
        CHECK(a->data[3] == doctest::Approx(b->data[1]).epsilon(1e-12));
        CHECK(a->data[2] == doctest::Approx(b->data[4]).epsilon(1e-12));
        CHECK(a->data[0] == doctest::Approx(b->data[0]).epsilon(1e-12));
    }
    SUBCASE("empty sequence is a usage error") {
        ad::Tape tape;
        const auto h = ad::leaf({0, d}, {});
        CHECK_THROWS_AS(predict_contributions(model.cps[0], h, ad::zeros({0})), UsageError);
    }
}

TEST_CASE("distillation loss worked values") {
    const auto model = tiny_adaptive();
    SUBCASE("zero when predictor matches the amplified target at every layer") {
        // build contributions equal to the targets
        ad::Tape tape;
        const std::vector<double> saliency = {0.25, 0.5, 0.25};
        std::vector<ad::Value> contributions;
        for (std::size_t l = 0; l < model.num_layers(); ++l) {
            contributions.push_back(
                ad::leaf({3}, amplified_target(saliency, model.amplify(l))));
        }
        const auto loss = cp_distillation_loss(model, contributions, saliency);
        CHECK(loss->data[0] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("layer weighting is (L - l)") {
        // with L=2 the first layer counts twice, the second once
        ad::Tape tape;
        auto model2 = tiny_adaptive(9);
        // force amplification to exactly 1 so targets equal the saliency
        std::fill(model2.raw_amplify->data.begin(), model2.raw_amplify->data.end(), -40.0);
        const std::vector<double> saliency = {0.5, 0.5};
        const ad::Value mismatch = ad::leaf({2}, {0.25, 0.75});
        const ad::Value match = ad::leaf({2}, {0.5, 0.5});
        const double kl = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);

        const auto loss0 = cp_distillation_loss(model2, {mismatch, match}, saliency);
        CHECK(loss0->data[0] == doctest::Approx(2.0 * kl).epsilon(1e-9));
        const auto loss1 = cp_distillation_loss(model2, {match, mismatch}, saliency);
        CHECK(loss1->data[0] == doctest::Approx(kl).epsilon(1e-9));
        const auto both = cp_distillation_loss(model2, {mismatch, mismatch}, saliency);
        CHECK(both->data[0] == doctest::Approx(3.0 * kl).epsilon(1e-9));
    }
    SUBCASE("nonnegative on random distributions") {
        Rng rng(12);
        ad::Tape tape;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> saliency(4);
            std::vector<double> pred(4);
            double zs = 0.0, zp = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                saliency[i] = rng.uniform(0.01, 1.0);
                pred[i] = rng.uniform(0.01, 1.0);
                zs += saliency[i];
                zp += pred[i];
            }
            for (std::size_t i = 0; i < 4; ++i) {
                saliency[i] /= zs;
                pred[i] /= zp;
            }
            std::vector<ad::Value> contributions = {ad::leaf({4}, pred), ad::leaf({4}, pred)};
            CHECK(cp_distillation_loss(tiny_adaptive(trial), contributions, saliency)->data[0] >=
                  0.0);
        }
    }
}

TEST_CASE("length loss worked values") {
    ad::Tape tape;
    SUBCASE("open masks count every token in every layer") {
        const std::size_t layers = 3, n = 5;
        std::vector<ad::Value> masks;
        for (std::size_t l = 0; l < layers; ++l) masks.push_back(ad::zeros({n}));
        CHECK(length_loss(masks)->data[0] == doctest::Approx(double(layers * n)));
    }
    SUBCASE("a fully masked token contributes nothing") {
        std::vector<ad::Value> masks = {ad::leaf({2}, {0.0, -10000.0})};
        CHECK(length_loss(masks)->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("two half-faded tokens count as one") {
        const double v = -std::log(2.0);
        std::vector<ad::Value> masks = {ad::leaf({2}, {v, v})};
        CHECK(length_loss(masks)->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("masked forward: masks accumulate, stay nonpositive, spare [CLS]") {
    const auto model = tiny_adaptive(4);
    const auto ids = model.encoder.vocab.encode("good movie it was fine", 10);
    ad::Tape tape;
    const auto fwd = masked_forward(model, ids, 9.0, 0.01);
    REQUIRE(fwd.masks.size() == model.num_layers());
    std::vector<double> prev(ids.size(), 0.0);
    for (const auto& mask : fwd.masks) {
        CHECK(mask->data[0] == 0.0);  // [CLS] never faded
        for (std::size_t i = 0; i < ids.size(); ++i) {
            CHECK(mask->data[i] <= 0.0);
            CHECK(mask->data[i] <= prev[i] + 1e-15);  // monotone accumulation
        }
        prev = mask->data;
    }
}

TEST_CASE("full composite training loss passes the gradient check") {
    auto model = tiny_adaptive(6);
    const auto ids = model.encoder.vocab.encode("good movie it was", 10);
    const auto saliency = uniform_saliency(ids.size());
    const double lambda = 3.0, beta = 0.01;

    std::vector<ad::Value> leaves = model.main_params.values();
    leaves.push_back(model.raw_threshold);
    leaves.push_back(model.cls_dummy);

    const auto build = [&]() {
        const auto fwd = masked_forward(model, ids, lambda, beta);
        const auto ce = ad::cross_entropy(fwd.logits, 1);
        const auto cp = cp_distillation_loss(model, fwd.contributions, saliency);
        const auto len = length_loss(fwd.masks);
        return ad::add(ce, ad::add(ad::scale(cp, 0.05), ad::scale(len, 0.001)));
    };
    // the composite graph routes gradients through near-dead predictor
    // paths at init whose true values sit below the FD noise floor, so
    // assert over the coordinates central differences can resolve
    const auto report = ad::finite_difference_check(build, leaves, 1e-5);
    CHECK(report.max_rel_error_resolved <= 1e-4);
}

TEST_CASE("finetuning learns a trivial task and tracks dev accuracy") {
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 60; ++i) {
        const bool pos = i % 2 == 0;
        records.push_back({"r" + std::to_string(i),
                           pos ? "good movie it was" : "bad film it was", pos ? 1 : 0,
                           std::nullopt});
    }
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.text);
    EncoderConfig c;
    c.num_layers = 2;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 12;
    c.max_len = 8;
    c.num_classes = 2;
    Rng rng(8);
    auto model = EncoderModel::init(c, Vocabulary::build(texts), rng);
    const auto examples = prepare_examples(records, model.vocab, c.max_len);
    const auto log = finetune_backbone(model, examples, examples, 6, 8, 3e-3, rng);
    REQUIRE(log.size() == 6);
    CHECK(log.back().dev_accuracy >= 0.95);
    CHECK(log.back().train_loss < log.front().train_loss);
}

TEST_CASE("adaptive training respects the A/B parameter split") {
    auto model = tiny_adaptive(10);
    std::vector<Example> train;
    const auto& vocab = model.encoder.vocab;
    for (int i = 0; i < 12; ++i) {
        const bool pos = i % 2 == 0;
        train.push_back({"e" + std::to_string(i),
                         vocab.encode(pos ? "good movie it was" : "bad film it was", 10),
                         pos ? 1 : 0});
    }
    SaliencyCache cache;
    for (const auto& e : train) cache.records[e.id] = uniform_saliency(e.tokens.size());

    AdaptiveHyperparams hyper;
    hyper.epochs = 2;
    hyper.batch_size = 4;
    hyper.learning_rate = 1e-3;
    hyper.speedup_learning_rate = 1e-2;
    hyper.cp_loss_weight = 0.05;
    hyper.length_loss_weight = 0.01;
    hyper.schedule = {3.0, 3.0, 0.01};

    Rng rng(11);
    // the loop itself asserts the freeze contracts every batch
    const auto log = train_adaptive(model, train, train, cache, hyper, rng);
    REQUIRE(log.size() == 2);
    CHECK(log[0].lambda == doctest::Approx(3.0));
    CHECK(log[1].lambda == doctest::Approx(9.0));
    for (const double v : model.cls_dummy->data) CHECK(v == 1.0);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        CHECK(model.threshold(l) > 0.0);
        CHECK(model.threshold(l) < 1.0);
        CHECK(model.amplify(l) >= 1.0);
    }

    SUBCASE("zero loss weights leave the CE path intact") {
        auto model2 = tiny_adaptive(12);
        AdaptiveHyperparams h2 = hyper;
        h2.cp_loss_weight = 0.0;
        h2.length_loss_weight = 0.0;
        Rng rng2(13);
        const auto log2 = train_adaptive(model2, train, train, cache, h2, rng2);
        CHECK(log2.back().ce <= log2.front().ce * 1.5);  // still optimizes the task
    }
}

TEST_CASE("missing saliency record is a hard error") {
    auto model = tiny_adaptive(14);
    std::vector<Example> train = {
        {"present", model.encoder.vocab.encode("good movie", 10), 1},
        {"absent", model.encoder.vocab.encode("bad film", 10), 0},
    };
    SaliencyCache cache;
    cache.records["present"] = uniform_saliency(train[0].tokens.size());
    AdaptiveHyperparams hyper;
    hyper.epochs = 1;
    hyper.schedule = {3.0, 3.0, 0.01};
    Rng rng(15);
    CHECK_THROWS_AS(train_adaptive(model, train, {}, cache, hyper, rng), MissingArtifact);
}
