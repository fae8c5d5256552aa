// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>

#include "lenred/common.hpp"

namespace lenred {

std::vector<std::string> Vocabulary::split_words(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (const char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                out.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
    std::map<std::string, std::size_t> counts;  // ordered map for a stable tie-break
    for (const auto& text : texts) {
        for (auto& w : split_words(text)) ++counts[w];
    }
    std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> words = {"[CLS]", "[UNK]"};
    words.reserve(entries.size() + 2);
    for (auto& [word, count] : entries) words.push_back(word);
    return from_words(std::move(words));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    if (words.size() < 2 || words[0] != "[CLS]" || words[1] != "[UNK]") {
        throw ConfigError("Vocabulary: word list must start with [CLS], [UNK]");
    }
    Vocabulary v;
    v.words_ = std::move(words);
    for (std::size_t i = 0; i < v.words_.size(); ++i) {
        v.ids_.emplace(v.words_[i], static_cast<int>(i));
    }
    return v;
}

int Vocabulary::id(const std::string& word) const {
    const auto it = ids_.find(word);
    return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text, std::size_t max_len) const {
    std::vector<int> ids = {kCls};
    const auto words = split_words(text);
    if (words.size() + 1 > max_len) {
        std::cerr << "warning: truncating sequence of " << words.size() + 1
                  << " tokens to max_len=" << max_len << "\n";
    }
    for (const auto& w : words) {
        if (ids.size() >= max_len) break;
        ids.push_back(id(w));
    }
    return ids;
}

}  // namespace lenred
