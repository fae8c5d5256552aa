// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lenred/common.hpp"
#include "lenred/tensor.hpp"

namespace lenred {

// Ordered, named registry of trainable leaves. Ordering is the iteration
// order for optimizers, serialization, and hashing, so it must stay
// deterministic.
class ParamSet {
public:
    void add(std::string name, ad::Value value) {
        items_.emplace_back(std::move(name), std::move(value));
    }

    void extend(const ParamSet& other) {
        for (const auto& [name, value] : other.items_) items_.emplace_back(name, value);
    }

    const std::vector<std::pair<std::string, ad::Value>>& items() const { return items_; }

    std::vector<ad::Value> values() const {
        std::vector<ad::Value> out;
        out.reserve(items_.size());
        for (const auto& [name, value] : items_) out.push_back(value);
        return out;
    }

    ad::Value find(const std::string& name) const {
        for (const auto& [n, v] : items_) {
            if (n == name) return v;
        }
        throw UsageError("ParamSet: no parameter named " + name);
    }

    void zero_grad() const {
        for (const auto& [n, v] : items_) v->zero_grad();
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& [name, value] : items_) n += value->size();
        return n;
    }

    // Hash over parameter values (not gradients), used to assert that an
    // optimization step touched only the parameters it owns.
    std::uint64_t data_hash() const {
        Fnv1a h;
        for (const auto& [name, value] : items_) {
            h.update(name);
            h.update(value->data.data(), value->data.size() * sizeof(double));
        }
        return h.digest();
    }

private:
    std::vector<std::pair<std::string, ad::Value>> items_;
};

}  // namespace lenred
