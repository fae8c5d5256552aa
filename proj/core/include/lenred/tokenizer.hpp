// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace lenred {

// Whitespace + lowercase tokenizer over a corpus-built vocabulary.
// Id 0 is [CLS] (always prepended), id 1 is [UNK]. Remaining ids are
// corpus words ordered by frequency (descending) then lexicographically,
// so identical corpora always produce identical vocabularies.
class Vocabulary {
public:
    static constexpr int kCls = 0;
    static constexpr int kUnk = 1;

    static Vocabulary build(const std::vector<std::string>& texts);
    static Vocabulary from_words(std::vector<std::string> words);  // includes specials
    static std::vector<std::string> split_words(const std::string& text);

    // [CLS] + word ids, truncated to max_len tokens (warns on truncation).
    std::vector<int> encode(const std::string& text, std::size_t max_len) const;

    int id(const std::string& word) const;
    const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
};

}  // namespace lenred
