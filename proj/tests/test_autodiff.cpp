// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode engine: worked examples, tape contracts, and the
// finite-difference property suite over every primitive.

#include <cmath>
#include <thread>
#include <vector>

#include "doctest.h"
#include "lenred/grad_check.hpp"
#include "lenred/ops.hpp"
#include "lenred/rng.hpp"
#include "lenred/tensor.hpp"

using namespace lenred;
using namespace lenred::ad;

namespace {

Value random_leaf(Rng& rng, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(lo, hi);
    return leaf(std::move(shape), std::move(data), true);
}

Value random_distribution_leaf(Rng& rng, std::size_t n) {
    std::vector<double> data(n);
    double z = 0.0;
    for (auto& v : data) {
        v = rng.uniform(0.05, 1.0);
        z += v;
    }
    for (auto& v : data) v /= z;
    return leaf({n}, std::move(data), true);
}

// Contract out to a scalar with fixed random weights so every output
// coordinate receives a distinct cotangent.
Value contract(Rng& rng, const Value& out) {
    std::vector<double> w(out->size());
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    return sum(mul(out, leaf(out->shape, std::move(w), false)));
}

}  // namespace

TEST_CASE("matmul worked example: 1x2 by 2x1") {
    Tape tape;
    auto a = leaf({1, 2}, {1.0, 2.0}, false);
    auto b = leaf({2, 1}, {3.0, 4.0}, false);
    auto c = matmul(a, b);
    CHECK(c->data.size() == 1);
    CHECK(c->data[0] == doctest::Approx(11.0));
}

TEST_CASE("softmax of zeros is uniform") {
    Tape tape;
    auto x = leaf({3}, {0.0, 0.0, 0.0}, false);
    auto y = softmax_rows(x);
    for (const double v : y->data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("exp at zero: value 1, gradient 1") {
    Tape tape;
    auto x = scalar(0.0, true);
    auto y = exp_(x);
    CHECK(y->data[0] == doctest::Approx(1.0));
    tape.backward(y);
    CHECK(x->grad[0] == doctest::Approx(1.0));
}

TEST_CASE("backward worked examples") {
    SUBCASE("y = x*x at x=3") {
        Tape tape;
        auto x = scalar(3.0, true);
        auto y = mul(x, x);
        tape.backward(y);
        CHECK(x->grad[0] == doctest::Approx(6.0));
    }
    SUBCASE("y = softmax(x)[0] at x=[0,0]") {
        Tape tape;
        auto x = leaf({2}, {0.0, 0.0}, true);
        auto y = index(softmax_rows(x), 0);
        tape.backward(y);
        CHECK(x->grad[0] == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(x->grad[1] == doctest::Approx(-0.25).epsilon(1e-9));
    }
    SUBCASE("y = sum(exp(m)) at m=[0,0]") {
        Tape tape;
        auto m = leaf({2}, {0.0, 0.0}, true);
        auto y = sum(exp_(m));
        tape.backward(y);
        CHECK(m->grad[0] == doctest::Approx(1.0));
        CHECK(m->grad[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("gradient accumulates across fan-out") {
    // k identical uses multiply the single-use gradient by k
    for (int k = 2; k <= 5; ++k) {
        Tape tape;
        auto x = leaf({3}, {0.5, -1.0, 2.0}, true);
        Value acc = sum(x);
        for (int i = 1; i < k; ++i) acc = add(acc, sum(x));
        tape.backward(acc);
        for (const double g : x->grad) CHECK(g == doctest::Approx(static_cast<double>(k)));
    }
}

TEST_CASE("requires_grad=false nodes accumulate no gradient") {
    Tape tape;
    auto a = leaf({2}, {1.0, 2.0}, false);
    auto b = leaf({2}, {3.0, 4.0}, true);
    auto y = sum(mul(a, b));
    tape.backward(y);
    CHECK(a->grad.empty());
    CHECK(b->grad.size() == 2);
}

TEST_CASE("tape contracts") {
    SUBCASE("non-scalar root rejected") {
        Tape tape;
        auto x = leaf({2}, {1.0, 2.0}, true);
        auto y = exp_(x);
        CHECK_THROWS_AS(tape.backward(y), UsageError);
    }
    SUBCASE("tape consumed by exactly one backward pass") {
        Tape tape;
        auto x = scalar(2.0, true);
        auto y = mul(x, x);
        tape.backward(y);
        CHECK_THROWS_AS(tape.backward(y), UsageError);
    }
    SUBCASE("ops outside any tape are rejected when gradients flow") {
        auto x = scalar(2.0, true);
        CHECK_THROWS_AS(mul(x, x), UsageError);
    }
    SUBCASE("root gradient is 1 after backward") {
        Tape tape;
        auto x = scalar(2.0, true);
        auto y = mul(x, x);
        tape.backward(y);
        CHECK(y->grad[0] == 1.0);
    }
}

TEST_CASE("shape mismatches raise ConfigError") {
    Tape tape;
    auto a = leaf({2, 3}, std::vector<double>(6, 1.0), false);
    auto b = leaf({2, 2}, std::vector<double>(4, 1.0), false);
    CHECK_THROWS_AS(matmul(a, b), ConfigError);
    CHECK_THROWS_AS(add(a, b), ConfigError);
    CHECK_THROWS_AS(mul(a, b), ConfigError);
}

TEST_CASE("finite_difference_check worked examples") {
    SUBCASE("f = x^2 at x=3") {
        auto x = scalar(3.0, true);
        auto report = finite_difference_check([&]() { return mul(x, x); }, {x}, 1e-4);
        CHECK(report.max_rel_error <= 1e-6);
    }
    SUBCASE("constant f has zero analytic gradient and zero error") {
        auto x = scalar(1.5, true);
        auto report = finite_difference_check([&]() { return scalar(7.0, false); }, {x}, 1e-4);
        CHECK(report.max_rel_error == 0.0);
    }
    SUBCASE("random two-layer net with 100 parameters") {
        Rng rng(7);
        auto w1 = random_leaf(rng, {9, 9});   // 81
        auto b1 = random_leaf(rng, {9});      // 9
        auto w2 = random_leaf(rng, {9, 1});   // 9
        auto b2 = random_leaf(rng, {1});      // 1 -> 100 params
        auto x = random_leaf(rng, {3, 9});
        x->requires_grad = false;
        auto build = [&]() {
            auto h = tanh_(linear(x, w1, b1));
            return sum(linear(h, w2, b2));
        };
        auto report = finite_difference_check(build, {w1, b1, w2, b2}, 1e-5);
        CHECK(report.max_rel_error <= 1e-4);
    }
}

TEST_CASE("softmax rows are nonnegative and sum to one") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tape tape;
        const std::size_t n = 1 + rng.index(6), m = 1 + rng.index(6);
        auto x = random_leaf(rng, {n, m}, -30.0, 30.0);
        auto y = softmax_rows(x);
        for (std::size_t i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                CHECK(y->data[i * m + j] >= 0.0);
                row_sum += y->data[i * m + j];
            }
            CHECK(std::abs(row_sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("every primitive matches central differences over 100 seeds") {
    constexpr double kTol = 1e-4;
    constexpr double kStep = 1e-6;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const std::size_t n = 2 + rng.index(4);
        const std::size_t m = 2 + rng.index(4);

        auto check_op = [&](const std::function<Value()>& build, const std::vector<Value>& params) {
            auto report = finite_difference_check(build, params, kStep);
            CAPTURE(seed);
            CHECK(report.max_rel_error <= kTol);
        };

        {
            auto a = random_leaf(rng, {n, m});
            auto b = random_leaf(rng, {n, m});
            check_op([&]() { Rng c(seed); return contract(c, add(a, b)); }, {a, b});
            check_op([&]() { Rng c(seed); return contract(c, sub(a, b)); }, {a, b});
            check_op([&]() { Rng c(seed); return contract(c, mul(a, b)); }, {a, b});
        }
        {
            auto a = random_leaf(rng, {n, m});
            auto b = random_leaf(rng, {m});
            check_op([&]() { Rng c(seed); return contract(c, add(a, b)); }, {a, b});  // row broadcast
        }
        {
            auto a = random_leaf(rng, {n, m});
            auto s = leaf({}, {rng.uniform(0.5, 2.0)}, true);
            check_op([&]() { Rng c(seed); return contract(c, mul(a, s)); }, {a, s});
            check_op([&]() { Rng c(seed); return contract(c, div(a, s)); }, {a, s});
            check_op([&]() { Rng c(seed); return contract(c, add(a, s)); }, {a, s});
        }
        {
            auto a = random_leaf(rng, {n, m});
            auto b = random_leaf(rng, {m, n});
            check_op([&]() { Rng c(seed); return contract(c, matmul(a, b)); }, {a, b});
        }
        {
            auto a = random_leaf(rng, {n, m});
            auto b = random_leaf(rng, {n, m});
            check_op([&]() { Rng c(seed); return contract(c, matmul_nt(a, b)); }, {a, b});
        }
        {
            auto x = random_leaf(rng, {n, m});
            auto w = random_leaf(rng, {m, n});
            auto b = random_leaf(rng, {n});
            check_op([&]() { Rng c(seed); return contract(c, linear(x, w, b)); }, {x, w, b});
        }
        {
            auto a = random_leaf(rng, {n}, -2.0, 2.0);
            check_op([&]() { Rng c(seed); return contract(c, exp_(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, tanh_(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, sigmoid(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, softplus(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, gelu(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, scale(a, 1.7)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, add_const(a, -0.3)); }, {a});
        }
        {
            auto a = random_leaf(rng, {n}, 0.1, 3.0);
            check_op([&]() { Rng c(seed); return contract(c, log_(a)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, l2norm_rows(a)); }, {a});
        }
        {
            auto a = random_leaf(rng, {n, m}, 0.1, 3.0);
            check_op([&]() { Rng c(seed); return contract(c, l2norm_rows(a)); }, {a});
        }
        {
            auto a = random_leaf(rng, {n, m});
            check_op([&]() { Rng c(seed); return contract(c, softmax_rows(a)); }, {a});
        }
        {
            // rows of width 2 normalize to exactly +-1, a locally constant
            // map whose zero input-gradient drowns in FD noise; use >= 3
            const std::size_t w = 3 + rng.index(3);
            auto x = random_leaf(rng, {n, w});
            auto g = random_leaf(rng, {w}, 0.5, 1.5);
            auto b = random_leaf(rng, {w});
            check_op([&]() { Rng c(seed); return contract(c, layer_norm(x, g, b)); }, {x, g, b});
        }
        {
            auto a = random_leaf(rng, {n, m});
            check_op([&]() { Rng c(seed); return contract(c, row(a, 0)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, slice_cols(a, 1, m - 1)); }, {a});
            check_op([&]() { Rng c(seed); return contract(c, gather_rows(a, {0, n - 1, 0})); }, {a});
            check_op([&]() { return sum(a); }, {a});
        }
        {
            auto a = random_leaf(rng, {n, 2});
            auto b = random_leaf(rng, {n, 3});
            check_op([&]() { Rng c(seed); return contract(c, concat_cols({a, b})); }, {a, b});
        }
        {
            auto table = random_leaf(rng, {5, m});
            std::vector<int> ids = {0, 3, 3, 1};
            check_op([&]() { Rng c(seed); return contract(c, embed_rows(table, ids)); }, {table});
        }
        {
            auto a = random_leaf(rng, {n});
            check_op([&]() { Rng c(seed); return contract(c, index(a, n - 1)); }, {a});
        }
        {
            auto logits = random_leaf(rng, {m});
            const std::size_t target = rng.index(m);
            check_op([&]() { return cross_entropy(logits, target); }, {logits});
        }
        {
            auto p = random_distribution_leaf(rng, n);
            auto q = random_distribution_leaf(rng, n);
            check_op([&]() { return kl_divergence(p, q); }, {p, q});
        }
    }
}

TEST_CASE("kl divergence basics") {
    Tape tape;
    auto p = leaf({2}, {0.5, 0.5}, false);
    auto q = leaf({2}, {0.25, 0.75}, false);
    auto d = kl_divergence(p, q);
    CHECK(d->data[0] == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-12));
    CHECK(kl_divergence(p, p)->data[0] == doctest::Approx(0.0));
    // clamped: zero entries in q do not produce inf/nan
    auto qz = leaf({2}, {0.0, 1.0}, false);
    CHECK(std::isfinite(kl_divergence(p, qz)->data[0]));
}

TEST_CASE("concurrent tapes on separate threads stay independent") {
    auto w = leaf({4}, {0.1, 0.2, 0.3, 0.4}, false);  // shared read-only
    std::vector<double> results(8, 0.0);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t]() {
            Tape tape;
            auto x = leaf({4}, {1.0 + t, 2.0, 3.0, 4.0}, true);
            auto y = sum(mul(x, w));
            tape.backward(y);
            results[t] = x->grad[0];
        });
    }
    for (auto& th : threads) th.join();
    for (const double r : results) CHECK(r == doctest::Approx(0.1));
}
