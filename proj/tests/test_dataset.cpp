// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "lenred/dataset.hpp"
#include "lenred/tokenizer.hpp"

using namespace lenred;

namespace {

SyntheticSpec small_keyword_spec() {
    SyntheticSpec spec;
    spec.task = SyntheticTask::kKeywordTopic;
    spec.train_size = 40;
    spec.dev_size = 10;
    spec.test_size = 10;
    spec.seq_words = 15;
    spec.num_classes = 4;
    spec.filler_vocab = 50;
    return spec;
}

}  // namespace

TEST_CASE("keyword-topic generator contract") {
    const auto spec = small_keyword_spec();
    const auto data = generate_synthetic(spec, 42);
    CHECK(data.train.size() == 40);
    CHECK(data.dev.size() == 10);
    CHECK(data.test.size() == 10);

    const std::vector<std::string> keywords = {"soccer", "galaxy", "piano", "budget"};
    for (const auto& r : data.train) {
        const auto words = Vocabulary::split_words(r.text);
        CHECK(words.size() == spec.seq_words);
        REQUIRE(r.rationale.has_value());
        CHECK(r.rationale->size() == words.size());

        std::size_t keyword_count = 0, keyword_class = 0, rationale_ones = 0;
        for (std::size_t w = 0; w < words.size(); ++w) {
            for (std::size_t c = 0; c < keywords.size(); ++c) {
                if (words[w] == keywords[c]) {
                    ++keyword_count;
                    keyword_class = c;
                    CHECK((*r.rationale)[w] == 1);
                }
            }
            rationale_ones += static_cast<std::size_t>((*r.rationale)[w]);
        }
        CHECK(keyword_count == 1);          // exactly one class keyword
        CHECK(rationale_ones == 1);         // rationale marks only that word
        CHECK(static_cast<std::size_t>(r.label) == keyword_class);
    }
}

TEST_CASE("sentiment-lexicon generator contract") {
    SyntheticSpec spec = small_keyword_spec();
    spec.task = SyntheticTask::kSentimentLexicon;
    spec.num_classes = 2;
    const auto data = generate_synthetic(spec, 7);
    const std::vector<std::string> pos = {"good", "great", "excellent", "superb", "delightful",
                                          "charming"};
    const std::vector<std::string> neg = {"bad", "awful", "terrible", "dreadful", "dull", "bleak"};
    for (const auto& r : data.train) {
        const auto words = Vocabulary::split_words(r.text);
        std::size_t p = 0, n = 0;
        for (std::size_t w = 0; w < words.size(); ++w) {
            const bool is_pos = std::find(pos.begin(), pos.end(), words[w]) != pos.end();
            const bool is_neg = std::find(neg.begin(), neg.end(), words[w]) != neg.end();
            if (is_pos) ++p;
            if (is_neg) ++n;
            CHECK((*r.rationale)[w] == (is_pos || is_neg ? 1 : 0));
        }
        CHECK(p != n);  // generator never ties
        CHECK(r.label == (p > n ? 1 : 0));
    }
}

TEST_CASE("fixed seed gives byte-identical dataset files") {
    const auto spec = small_keyword_spec();
    const std::string a = "test_dataset_a.jsonl", b = "test_dataset_b.jsonl";
    save_dataset(a, generate_synthetic(spec, 99).train);
    save_dataset(b, generate_synthetic(spec, 99).train);
    std::ifstream fa(a), fb(b);
    const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
    CHECK(!ca.empty());

    // different seed, different bytes
    save_dataset(b, generate_synthetic(spec, 100).train);
    std::ifstream fb2(b);
    const std::string cb2((std::istreambuf_iterator<char>(fb2)), std::istreambuf_iterator<char>());
    CHECK(ca != cb2);
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("dataset round-trip and validation") {
    const auto spec = small_keyword_spec();
    const auto data = generate_synthetic(spec, 5);
    const std::string path = "test_dataset_rt.jsonl";
    save_dataset(path, data.test);
    const auto loaded = load_dataset(path, spec.num_classes);
    REQUIRE(loaded.size() == data.test.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == data.test[i].id);
        CHECK(loaded[i].text == data.test[i].text);
        CHECK(loaded[i].label == data.test[i].label);
        CHECK(loaded[i].rationale == data.test[i].rationale);
    }
    std::remove(path.c_str());

    SUBCASE("label out of range is rejected") {
        std::ofstream os(path);
        os << R"({"id":"x","text":"a b","label":7})" << "\n";
        os.close();
        CHECK_THROWS_AS(load_dataset(path, 4), ConfigError);
        std::remove(path.c_str());
    }
    SUBCASE("rationale length mismatch is rejected") {
        std::ofstream os(path);
        os << R"({"id":"x","text":"a b c","label":0,"rationale":[1,0]})" << "\n";
        os.close();
        CHECK_THROWS_AS(load_dataset(path, 4), ConfigError);
        std::remove(path.c_str());
    }
    SUBCASE("missing file is a missing artifact") {
        CHECK_THROWS_AS(load_dataset("no_such_file.jsonl", 4), MissingArtifact);
    }
}

TEST_CASE("rationale-only filtering keeps exactly the marked words") {
    DatasetRecord r{"r", "the soccer match was dull", 1, std::vector<int>{0, 1, 0, 0, 1}};
    const auto filtered = filter_to_rationale({r});
    CHECK(filtered[0].text == "soccer dull");
    CHECK(filtered[0].rationale == std::vector<int>{1, 1});
}
