// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/dataset.hpp"

#include <fstream>

#include "json.hpp"
#include "lenred/common.hpp"
#include "lenred/rng.hpp"
#include "lenred/tokenizer.hpp"

namespace lenred {

namespace {

using nlohmann::json;

const std::vector<std::string>& keyword_bank() {
    static const std::vector<std::string> bank = {
        "soccer", "galaxy", "piano",   "budget", "glacier", "novel",
        "circuit", "harvest", "voltage", "sonnet", "tariff", "nebula"};
    return bank;
}

const std::vector<std::string>& positive_bank() {
    static const std::vector<std::string> bank = {"good", "great", "excellent", "superb",
                                                  "delightful", "charming"};
    return bank;
}

const std::vector<std::string>& negative_bank() {
    static const std::vector<std::string> bank = {"bad", "awful", "terrible", "dreadful",
                                                  "dull", "bleak"};
    return bank;
}

std::vector<std::string> filler_words(std::size_t count) {
    static const std::vector<std::string> common = {
        "the", "a", "of", "and", "to", "in", "it", "was", "on", "for",
        "with", "as", "at", "by", "an", "be", "this", "that", "from", "or",
        "had", "his", "her", "they", "we", "you", "but", "not", "are", "were",
        "been", "has", "its", "their", "one", "all", "would", "there", "what", "so"};
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (i < common.size()) {
            out.push_back(common[i]);
        } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "f%03zu", i - common.size());
            out.emplace_back(buf);
        }
    }
    return out;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text += " ";
        text += words[i];
    }
    return text;
}

DatasetRecord make_keyword_example(const SyntheticSpec& spec,
                                   const std::vector<std::string>& fillers, Rng& rng,
                                   std::string id) {
    const std::size_t cls = rng.index(spec.num_classes);
    const std::size_t kw_pos = rng.index(spec.seq_words);
    std::vector<std::string> words(spec.seq_words);
    std::vector<int> rationale(spec.seq_words, 0);
    for (std::size_t i = 0; i < spec.seq_words; ++i) {
        words[i] = fillers[rng.index(fillers.size())];
    }
    words[kw_pos] = keyword_bank()[cls % keyword_bank().size()];
    rationale[kw_pos] = 1;
    return {std::move(id), join_words(words), static_cast<int>(cls), std::move(rationale)};
}

DatasetRecord make_sentiment_example(const SyntheticSpec& spec,
                                     const std::vector<std::string>& fillers, Rng& rng,
                                     std::string id) {
    const std::size_t max_polar = std::max<std::size_t>(3, spec.seq_words / 6);
    std::size_t pos_count = 0, neg_count = 0;
    while (pos_count == neg_count) {
        pos_count = rng.index(max_polar + 1);
        neg_count = rng.index(max_polar + 1);
    }
    const int label = pos_count > neg_count ? 1 : 0;

    std::vector<std::string> words(spec.seq_words);
    std::vector<int> rationale(spec.seq_words, 0);
    for (std::size_t i = 0; i < spec.seq_words; ++i) words[i] = fillers[rng.index(fillers.size())];

    std::vector<std::size_t> positions(spec.seq_words);
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    rng.shuffle(positions);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < pos_count; ++i, ++cursor) {
        words[positions[cursor]] = positive_bank()[rng.index(positive_bank().size())];
        rationale[positions[cursor]] = 1;
    }
    for (std::size_t i = 0; i < neg_count; ++i, ++cursor) {
        words[positions[cursor]] = negative_bank()[rng.index(negative_bank().size())];
        rationale[positions[cursor]] = 1;
    }
    return {std::move(id), join_words(words), label, std::move(rationale)};
}

std::vector<DatasetRecord> make_split(const SyntheticSpec& spec,
                                      const std::vector<std::string>& fillers,
                                      const std::string& split, std::size_t count, Rng& rng) {
    std::vector<DatasetRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string id = split + "-" + std::to_string(i);
        out.push_back(spec.task == SyntheticTask::kKeywordTopic
                          ? make_keyword_example(spec, fillers, rng, std::move(id))
                          : make_sentiment_example(spec, fillers, rng, std::move(id)));
    }
    return out;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (seq_words < 2) throw ConfigError("synthetic: seq_words must be >= 2");
    if (task == SyntheticTask::kKeywordTopic) {
        if (num_classes < 2 || num_classes > keyword_bank().size()) {
            throw ConfigError("synthetic: keyword-topic supports 2.." +
                              std::to_string(keyword_bank().size()) + " classes");
        }
    }
    if (filler_vocab < 10) throw ConfigError("synthetic: filler_vocab must be >= 10");
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto fillers = filler_words(spec.filler_vocab);
    SyntheticDataset data;
    {
        Rng rng(Rng::derive(seed, "synthetic-train"));
        data.train = make_split(spec, fillers, "train", spec.train_size, rng);
    }
    {
        Rng rng(Rng::derive(seed, "synthetic-dev"));
        data.dev = make_split(spec, fillers, "dev", spec.dev_size, rng);
    }
    {
        Rng rng(Rng::derive(seed, "synthetic-test"));
        data.test = make_split(spec, fillers, "test", spec.test_size, rng);
    }
    return data;
}

std::vector<DatasetRecord> filter_to_rationale(const std::vector<DatasetRecord>& records) {
    std::vector<DatasetRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!r.rationale) {
            throw UsageError("filter_to_rationale: record " + r.id + " has no rationale");
        }
        const auto words = Vocabulary::split_words(r.text);
        std::vector<std::string> kept;
        std::vector<int> mask;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if ((*r.rationale)[i]) {
                kept.push_back(words[i]);
                mask.push_back(1);
            }
        }
        out.push_back({r.id, join_words(kept), r.label, std::move(mask)});
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t num_classes) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("dataset not found: " + path);
    std::vector<DatasetRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": bad JSON record: " + e.what());
        }
        DatasetRecord r;
        r.id = j.value("id", path + ":" + std::to_string(line_no));
        r.text = j.at("text").get<std::string>();
        r.label = j.at("label").get<int>();
        if (r.label < 0 || static_cast<std::size_t>(r.label) >= num_classes) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": label " +
                              std::to_string(r.label) + " outside 0.." +
                              std::to_string(num_classes - 1));
        }
        if (j.contains("rationale") && !j["rationale"].is_null()) {
            r.rationale = j["rationale"].get<std::vector<int>>();
            const auto words = Vocabulary::split_words(r.text);
            if (r.rationale->size() != words.size()) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": rationale length does not match word count");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write dataset: " + path);
    for (const auto& r : records) {
        json j{{"id", r.id}, {"text", r.text}, {"label", r.label}};
        if (r.rationale) j["rationale"] = *r.rationale;
        os << j.dump() << "\n";
    }
}

}  // namespace lenred
