// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lenred {

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distribution helpers below avoid std::*_distribution, whose outputs are
// not pinned across library implementations. Identical seeds therefore
// produce byte-identical datasets and checkpoints on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, bound) via rejection sampling.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % bound;
    }

    std::size_t index(std::size_t bound) { return static_cast<std::size_t>(next_below(bound)); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, no cached spare so the stream layout stays obvious.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    // Stable sub-seed derivation so every pipeline phase owns an
    // independent stream derived from the run seed.
    static std::uint64_t derive(std::uint64_t seed, const std::string& label) {
        std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
        for (const char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 33;
        return h;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace lenred
