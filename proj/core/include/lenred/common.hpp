// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lenred {

// Bad shapes, bad configuration values, malformed files. Maps to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A call that violates an API contract (wrong call order, empty input, ...).
// Also maps to exit code 2 at the CLI boundary.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf losses, numeric domain violations. Maps to exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline phase was started before a required artifact exists.
// The message names the missing artifact. Maps to exit code 3.
struct MissingArtifact : std::runtime_error {
    explicit MissingArtifact(const std::string& what) : std::runtime_error(what) {}
};

// FNV-1a, used for parameter-freeze assertions and artifact idempotency checks.
class Fnv1a {
public:
    void update(const void* bytes, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace lenred
