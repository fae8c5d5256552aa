// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "lenred/checkpoint.hpp"
#include "lenred/encoder.hpp"
#include "lenred/grad_check.hpp"

using namespace lenred;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig c;
    c.num_layers = 2;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.ffn_dim = 12;
    c.max_len = 8;
    c.num_classes = 2;
    return c;
}

Vocabulary tiny_vocab() {
    return Vocabulary::build({"good movie", "bad film", "it was fine", "truly awful stuff"});
}

EncoderModel tiny_model(std::uint64_t seed = 1) {
    Rng rng(seed);
    return EncoderModel::init(tiny_config(), tiny_vocab(), rng);
}

}  // namespace

TEST_CASE("tokenizer basics") {
    const auto vocab = tiny_vocab();
    SUBCASE("[CLS] prepended") {
        const auto ids = vocab.encode("good movie", 8);
        REQUIRE(ids.size() == 3);
        CHECK(ids[0] == Vocabulary::kCls);
        CHECK(vocab.word(ids[1]) == "good");
        CHECK(vocab.word(ids[2]) == "movie");
    }
    SUBCASE("empty text is just [CLS]") {
        const auto ids = vocab.encode("", 8);
        CHECK(ids == std::vector<int>{Vocabulary::kCls});
    }
    SUBCASE("out-of-vocabulary maps to [UNK]") {
        const auto ids = vocab.encode("spaceship", 8);
        CHECK(ids == std::vector<int>{Vocabulary::kCls, Vocabulary::kUnk});
    }
    SUBCASE("truncation at max_len") {
        const auto ids = vocab.encode("good movie it was fine truly awful stuff bad film", 4);
        CHECK(ids.size() == 4);
    }
    SUBCASE("lowercasing") {
        CHECK(vocab.encode("GOOD", 8) == vocab.encode("good", 8));
    }
}

TEST_CASE("attention rows sum to one for every layer and head") {
    const auto model = tiny_model();
    ad::Tape tape;
    const auto state = model.encode(model.vocab.encode("good movie it was fine", 8));
    for (const auto& heads : state.attention) {
        for (const auto& alpha : heads) {
            const std::size_t n = alpha->shape[0];
            for (std::size_t i = 0; i < n; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < n; ++j) sum += alpha->data[i * n + j];
                CHECK(std::abs(sum - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("uniform attention when scores are constant") {
    auto model = tiny_model();
    // zero query projection -> all scores equal -> uniform rows
    auto& wq = model.blocks[0].wq->data;
    std::fill(wq.begin(), wq.end(), 0.0);
    std::fill(model.blocks[0].bq->data.begin(), model.blocks[0].bq->data.end(), 0.0);
    ad::Tape tape;
    const auto ids = model.vocab.encode("good movie it was", 8);
    const auto state = model.encode(ids);
    const std::size_t n = ids.size();
    for (const auto& alpha : state.attention[0]) {
        for (std::size_t i = 0; i < n * n; ++i) {
            CHECK(alpha->data[i] == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("a -10000 mask entry zeroes its attention column") {
    const auto model = tiny_model();
    const auto ids = model.vocab.encode("good movie it was fine", 8);
    ad::Tape tape;
    std::vector<double> mask(ids.size(), 0.0);
    mask[2] = -10000.0;
    const auto state = model.encode(ids, ad::leaf({ids.size()}, mask));
    for (const auto& heads : state.attention) {
        for (const auto& alpha : heads) {
            const std::size_t n = alpha->shape[0];
            for (std::size_t i = 0; i < n; ++i) CHECK(alpha->data[i * n + 2] <= 1e-4);
        }
    }
}

TEST_CASE("single-token sequence attends only to itself") {
    const auto model = tiny_model();
    ad::Tape tape;
    const auto state = model.encode({Vocabulary::kCls});
    for (const auto& alpha : state.attention[0]) {
        REQUIRE(alpha->size() == 1);
        CHECK(alpha->data[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("empty sequence is rejected") {
    const auto model = tiny_model();
    ad::Tape tape;
    CHECK_THROWS_AS(model.embed({}), UsageError);
}

TEST_CASE("zero-initialized classifier head yields all-zero logits") {
    auto model = tiny_model();
    std::fill(model.classifier_w->data.begin(), model.classifier_w->data.end(), 0.0);
    std::fill(model.classifier_b->data.begin(), model.classifier_b->data.end(), 0.0);
    ad::Tape tape;
    const auto state = model.encode(model.vocab.encode("good movie", 8));
    for (const double v : state.logits->data) CHECK(v == 0.0);
}

TEST_CASE("identical seeds give bit-identical logits") {
    const auto a = tiny_model(7);
    const auto b = tiny_model(7);
    const auto ids = a.vocab.encode("truly awful stuff", 8);
    ad::Tape tape;
    const auto la = a.encode(ids).logits->data;
    const auto lb = b.encode(ids).logits->data;
    CHECK(la == lb);
}

TEST_CASE("masking a padded token approximates the unpadded run") {
    const auto model = tiny_model();
    const auto ids = model.vocab.encode("good movie it was", 8);
    ad::Tape tape;
    const auto plain = model.encode(ids).logits->data;

    auto padded = ids;
    padded.push_back(model.vocab.id("fine"));
    std::vector<double> mask(padded.size(), 0.0);
    mask.back() = -10000.0;
    const auto masked = model.encode(padded, ad::leaf({padded.size()}, mask)).logits->data;
    for (std::size_t c = 0; c < plain.size(); ++c) {
        CHECK(std::abs(plain[c] - masked[c]) <= 1e-3);
    }
}

TEST_CASE("masking approximates physical removal at block level") {
    const auto model = tiny_model();
    const auto ids = model.vocab.encode("good movie it was fine", 8);
    const std::size_t n = ids.size();
    ad::Tape tape;

    // mask out position 3 and run one block
    std::vector<double> mask(n, 0.0);
    mask[3] = -10000.0;
    const auto h_full = model.embed(ids);
    const auto out_masked =
        model.block_forward(0, h_full, ad::leaf({n}, mask)).h;

    // physically remove position 3
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != 3) kept.push_back(i);
    }
    const auto h_reduced = ad::gather_rows(h_full, kept);
    const auto out_removed = model.block_forward(0, h_reduced, ad::zeros({kept.size()})).h;

    const std::size_t d = model.config.hidden_dim;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            CHECK(std::abs(out_masked->data[kept[i] * d + j] - out_removed->data[i * d + j]) <=
                  1e-3);
        }
    }
}

TEST_CASE("layer norm emits zero mean and unit variance before affine") {
    Rng rng(3);
    const std::size_t n = 6, d = 16;
    std::vector<double> data(n * d);
    for (auto& v : data) v = rng.uniform(-2.0, 2.0);
    ad::Tape tape;
    const auto x = ad::leaf({n, d}, data);
    const auto y = ad::layer_norm(x, ad::leaf({d}, std::vector<double>(d, 1.0)),
                                  ad::leaf({d}, std::vector<double>(d, 0.0)));
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += y->data[i * d + j];
        mean /= d;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = y->data[i * d + j] - mean;
            var += c * c;
        }
        var /= d;
        CHECK(std::abs(mean) <= 1e-6);
        CHECK(std::abs(var - 1.0) <= 1e-6);
    }
}

TEST_CASE("encoder truncates overlong input with a warning") {
    const auto model = tiny_model();
    std::vector<int> ids(model.config.max_len + 4, Vocabulary::kUnk);
    ids[0] = Vocabulary::kCls;
    ad::Tape tape;
    const auto state = model.encode(ids);
    CHECK(state.hidden[0]->shape[0] == model.config.max_len);
}

TEST_CASE("config validation") {
    EncoderConfig c = tiny_config();
    c.num_heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.num_layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("cross-entropy gradient through the full tiny encoder matches finite differences") {
    // hot initialization: at tiny init scales the attention-score path
    // carries gradients below what central differences can resolve
    Rng rng(11);
    auto model = EncoderModel::init(tiny_config(), tiny_vocab(), rng, 0.5);
    const auto ids = model.vocab.encode("good movie it was", 8);
    const auto build = [&]() {
        const auto state = model.encode(ids);
        return ad::cross_entropy(state.logits, 1);
    };
    const auto report = ad::finite_difference_check(build, model.params.values(), 1e-5);
    CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const auto model = tiny_model(13);
    const std::string path = "test_ckpt_roundtrip.txt";
    save_backbone_checkpoint(path, model);
    const auto loaded = load_backbone_checkpoint(path);

    CHECK(loaded.config.num_layers == model.config.num_layers);
    CHECK(loaded.vocab.words() == model.vocab.words());
    const auto& a = model.params.items();
    const auto& b = loaded.params.items();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second->data == b[i].second->data);  // bitwise equality
    }

    // identical logits through the loaded model
    const auto ids = model.vocab.encode("bad film", 8);
    ad::Tape tape;
    CHECK(model.encode(ids).logits->data == loaded.encode(ids).logits->data);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects wrong kind and missing files") {
    CHECK_THROWS_AS(load_backbone_checkpoint("does_not_exist.ckpt"), MissingArtifact);
}
