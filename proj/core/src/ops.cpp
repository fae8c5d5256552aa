// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lenred::ad {

namespace {

void check(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

bool same_shape(const Value& a, const Value& b) {
    return a->shape == b->shape;
}

std::string shape_str(const Value& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v->shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v->shape[i]);
    }
    return s + "]";
}

// Raw GEMM kernels shared by every matrix-product forward and backward.
// Keeping them in one translation unit keeps the arithmetic bit-identical
// across all call sites, which the retain-all equivalence checks rely on.

// C = A[m,k] * B[k,n]
void mm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A[m,k] * B[k,n]
void mm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C = A[m,k] * B[n,k]^T
void mm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

// C += A[m,k] * B[n,k]^T
void mm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C += A[m,k]^T * B[m,n]
void mm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

Value unary_elementwise(const Value& a, double (*fwd)(double), double (*dfd)(double, double)) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a->data[i]);
    Value r = make_op(a->shape, std::move(out), a->requires_grad);
    if (r->requires_grad) {
        r->backward = [o = r.get(), a, dfd]() {
            auto& ga = a->grad_buffer();
            for (std::size_t i = 0; i < ga.size(); ++i) {
                ga[i] += dfd(a->data[i], o->data[i]) * o->grad[i];
            }
        };
    }
    return r;
}

}  // namespace

Value add(const Value& a, const Value& b) {
    const bool rg = a->requires_grad || b->requires_grad;
    if (same_shape(a, b)) {
        std::vector<double> out(a->size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
        Value r = make_op(a->shape, std::move(out), rg);
        if (rg) r->backward = [o = r.get(), a, b]() {
            if (a->requires_grad) {
                auto& g = a->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
            if (b->requires_grad) {
                auto& g = b->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
        };
        return r;
    }
    if (b->is_scalar()) {
        const double bv = b->data[0];
        std::vector<double> out(a->size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + bv;
        Value r = make_op(a->shape, std::move(out), rg);
        if (rg) r->backward = [o = r.get(), a, b]() {
            if (a->requires_grad) {
                auto& g = a->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
            if (b->requires_grad) {
                double acc = 0.0;
                for (const double g : o->grad) acc += g;
                b->grad_buffer()[0] += acc;
            }
        };
        return r;
    }
    if (a->shape.size() == 2 && b->shape.size() == 1 && a->shape[1] == b->shape[0]) {
        const std::size_t n = a->shape[0], m = a->shape[1];
        std::vector<double> out(a->size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a->data[i * m + j] + b->data[j];
        Value r = make_op(a->shape, std::move(out), rg);
        if (rg) r->backward = [o = r.get(), a, b, n, m]() {
            if (a->requires_grad) {
                auto& g = a->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
            if (b->requires_grad) {
                auto& g = b->grad_buffer();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) g[j] += o->grad[i * m + j];
            }
        };
        return r;
    }
    throw ConfigError("add: incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
}

Value sub(const Value& a, const Value& b) {
    const bool rg = a->requires_grad || b->requires_grad;
    if (same_shape(a, b) || b->is_scalar()) {
        const bool scalar_b = !same_shape(a, b);
        std::vector<double> out(a->size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = a->data[i] - (scalar_b ? b->data[0] : b->data[i]);
        }
        Value r = make_op(a->shape, std::move(out), rg);
        if (rg) r->backward = [o = r.get(), a, b, scalar_b]() {
            if (a->requires_grad) {
                auto& g = a->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
            if (b->requires_grad) {
                auto& g = b->grad_buffer();
                if (scalar_b) {
                    double acc = 0.0;
                    for (const double gv : o->grad) acc += gv;
                    g[0] -= acc;
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o->grad[i];
                }
            }
        };
        return r;
    }
    throw ConfigError("sub: incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
}

Value mul(const Value& a, const Value& b) {
    if (b->is_scalar() && !a->is_scalar()) {
        const bool rg = a->requires_grad || b->requires_grad;
        const double bv = b->data[0];
        std::vector<double> out(a->size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * bv;
        Value r = make_op(a->shape, std::move(out), rg);
        if (rg) r->backward = [o = r.get(), a, b]() {
            if (a->requires_grad) {
                auto& g = a->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += b->data[0] * o->grad[i];
            }
            if (b->requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < o->data.size(); ++i) acc += a->data[i] * o->grad[i];
                b->grad_buffer()[0] += acc;
            }
        };
        return r;
    }
    if (a->is_scalar() && !b->is_scalar()) return mul(b, a);
    check(same_shape(a, b), "mul: incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
    const bool rg = a->requires_grad || b->requires_grad;
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    Value r = make_op(a->shape, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), a, b]() {
        if (a->requires_grad) {
            auto& g = a->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += b->data[i] * o->grad[i];
        }
        if (b->requires_grad) {
            auto& g = b->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += a->data[i] * o->grad[i];
        }
    };
    return r;
}

Value div(const Value& a, const Value& b) {
    const bool scalar_b = b->is_scalar() && !a->is_scalar();
    check(scalar_b || same_shape(a, b),
          "div: incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
    const bool rg = a->requires_grad || b->requires_grad;
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] / (scalar_b ? b->data[0] : b->data[i]);
    }
    Value r = make_op(a->shape, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), a, b, scalar_b]() {
        if (a->requires_grad) {
            auto& g = a->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o->grad[i] / (scalar_b ? b->data[0] : b->data[i]);
            }
        }
        if (b->requires_grad) {
            auto& g = b->grad_buffer();
            for (std::size_t i = 0; i < o->data.size(); ++i) {
                const double bv = scalar_b ? b->data[0] : b->data[i];
                const double d = -o->grad[i] * a->data[i] / (bv * bv);
                g[scalar_b ? 0 : i] += d;
            }
        }
    };
    return r;
}

Value scale(const Value& a, double c) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
    Value r = make_op(a->shape, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, c]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * o->grad[i];
    };
    return r;
}

Value add_const(const Value& a, double c) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + c;
    Value r = make_op(a->shape, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
    };
    return r;
}

Value matmul(const Value& a, const Value& b) {
    check(b->shape.size() == 2, "matmul: right operand must be rank-2, got " + shape_str(b));
    const bool vec = a->shape.size() == 1;
    check(vec || a->shape.size() == 2, "matmul: left operand must be rank-1 or rank-2");
    const std::size_t m = vec ? 1 : a->shape[0];
    const std::size_t k = vec ? a->shape[0] : a->shape[1];
    const std::size_t n = b->shape[1];
    check(k == b->shape[0], "matmul: inner dims differ, " + shape_str(a) + " vs " + shape_str(b));
    std::vector<double> out(m * n);
    mm_nn(a->data.data(), b->data.data(), out.data(), m, k, n);
    const bool rg = a->requires_grad || b->requires_grad;
    Value r = make_op(vec ? std::vector<std::size_t>{n} : std::vector<std::size_t>{m, n},
                      std::move(out), rg);
    if (rg) r->backward = [o = r.get(), a, b, m, k, n]() {
        if (a->requires_grad) {
            mm_nt_acc(o->grad.data(), b->data.data(), a->grad_buffer().data(), m, n, k);
        }
        if (b->requires_grad) {
            mm_tn_acc(a->data.data(), o->grad.data(), b->grad_buffer().data(), m, k, n);
        }
    };
    return r;
}

Value matmul_nt(const Value& a, const Value& b) {
    check(a->shape.size() == 2 && b->shape.size() == 2, "matmul_nt: operands must be rank-2");
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[0];
    check(k == b->shape[1], "matmul_nt: inner dims differ, " + shape_str(a) + " vs " + shape_str(b));
    std::vector<double> out(m * n);
    mm_nt(a->data.data(), b->data.data(), out.data(), m, k, n);
    const bool rg = a->requires_grad || b->requires_grad;
    Value r = make_op({m, n}, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), a, b, m, k, n]() {
        if (a->requires_grad) {
            mm_nn_acc(o->grad.data(), b->data.data(), a->grad_buffer().data(), m, n, k);
        }
        if (b->requires_grad) {
            mm_tn_acc(o->grad.data(), a->data.data(), b->grad_buffer().data(), m, n, k);
        }
    };
    return r;
}

Value linear(const Value& x, const Value& w, const Value& b) {
    check(w->shape.size() == 2, "linear: weight must be rank-2");
    check(b->shape.size() == 1 && b->shape[0] == w->shape[1],
          "linear: bias shape " + shape_str(b) + " does not match weight " + shape_str(w));
    return add(matmul(x, w), b);
}

Value exp_(const Value& a) {
    return unary_elementwise(
        a, [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

Value log_(const Value& a) {
    return unary_elementwise(
        a, [](double x) { return std::log(std::max(x, kProbEpsilon)); },
        [](double x, double) { return x > kProbEpsilon ? 1.0 / x : 0.0; });
}

Value tanh_(const Value& a) {
    return unary_elementwise(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Value sigmoid(const Value& a) {
    return unary_elementwise(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Value softplus(const Value& a) {
    return unary_elementwise(
        a,
        [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Value gelu(const Value& a) {
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    constexpr double kInvSqrt2Pi = 0.3989422804014326779;
    return unary_elementwise(
        a,
        [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](double x, double) {
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        });
}

Value softmax_rows(const Value& a) {
    check(!a->shape.empty(), "softmax_rows: scalar input");
    const std::size_t cols = a->shape.back();
    check(cols > 0, "softmax_rows: empty rows");
    const std::size_t rows = a->size() / cols;
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < rows; ++i) {
        const double* in = a->data.data() + i * cols;
        double* o = out.data() + i * cols;
        double mx = in[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < cols; ++j) o[j] /= z;
    }
    Value r = make_op(a->shape, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, rows, cols]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < rows; ++i) {
            const double* y = o->data.data() + i * cols;
            const double* dy = o->grad.data() + i * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += y[j] * dy[j];
            double* gr = g.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += y[j] * (dy[j] - dot);
        }
    };
    return r;
}

Value l2norm_rows(const Value& a) {
    check(!a->shape.empty(), "l2norm_rows: scalar input");
    const std::size_t cols = a->shape.back();
    const std::size_t rows = a->size() / cols;
    std::vector<double> out(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* in = a->data.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += in[j] * in[j];
        out[i] = std::sqrt(acc);
    }
    const std::vector<std::size_t> shape =
        a->shape.size() == 1 ? std::vector<std::size_t>{} : std::vector<std::size_t>{rows};
    Value r = make_op(shape, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, rows, cols]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < rows; ++i) {
            const double norm = o->data[i];
            if (norm == 0.0) continue;
            const double go = o->grad[i] / norm;
            const double* in = a->data.data() + i * cols;
            double* gr = g.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += go * in[j];
        }
    };
    return r;
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias) {
    check(!x->shape.empty(), "layer_norm: scalar input");
    const std::size_t cols = x->shape.back();
    const std::size_t rows = x->size() / cols;
    check(gain->shape == std::vector<std::size_t>{cols} && bias->shape == std::vector<std::size_t>{cols},
          "layer_norm: gain/bias must be length-" + std::to_string(cols) + " vectors");
    constexpr double kEps = 1e-12;
    std::vector<double> out(x->size());
    std::vector<double> xhat(x->size());
    std::vector<double> inv_std(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* in = x->data.data() + i * cols;
        double mean = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mean += in[j];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = in[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + kEps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < cols; ++j) {
            const double xh = (in[j] - mean) * inv;
            xhat[i * cols + j] = xh;
            out[i * cols + j] = xh * gain->data[j] + bias->data[j];
        }
    }
    const bool rg = x->requires_grad || gain->requires_grad || bias->requires_grad;
    Value r = make_op(x->shape, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), x, gain, bias, rows, cols,
                           xhat = std::move(xhat), inv_std = std::move(inv_std)]() {
        for (std::size_t i = 0; i < rows; ++i) {
            const double* dy = o->grad.data() + i * cols;
            const double* xh = xhat.data() + i * cols;
            if (gain->requires_grad) {
                auto& gg = gain->grad_buffer();
                for (std::size_t j = 0; j < cols; ++j) gg[j] += dy[j] * xh[j];
            }
            if (bias->requires_grad) {
                auto& gb = bias->grad_buffer();
                for (std::size_t j = 0; j < cols; ++j) gb[j] += dy[j];
            }
            if (x->requires_grad) {
                double mean_t = 0.0, mean_tx = 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    const double t = dy[j] * gain->data[j];
                    mean_t += t;
                    mean_tx += t * xh[j];
                }
                mean_t /= static_cast<double>(cols);
                mean_tx /= static_cast<double>(cols);
                double* gx = x->grad_buffer().data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) {
                    const double t = dy[j] * gain->data[j];
                    gx[j] += inv_std[i] * (t - mean_t - xh[j] * mean_tx);
                }
            }
        }
    };
    return r;
}

Value reshape(const Value& a, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    check(n == a->size(), "reshape: element count mismatch");
    Value r = make_op(std::move(shape), a->data, a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
    };
    return r;
}

Value sum(const Value& a) {
    double acc = 0.0;
    for (const double v : a->data) acc += v;
    Value r = make_op({}, {acc}, a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a]() {
        auto& g = a->grad_buffer();
        const double go = o->grad[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
    };
    return r;
}

Value row(const Value& a, std::size_t i) {
    check(a->shape.size() == 2, "row: operand must be rank-2");
    check(i < a->shape[0], "row: index out of range");
    const std::size_t cols = a->shape[1];
    std::vector<double> out(a->data.begin() + i * cols, a->data.begin() + (i + 1) * cols);
    Value r = make_op({cols}, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, i, cols]() {
        double* g = a->grad_buffer().data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) g[j] += o->grad[j];
    };
    return r;
}

Value index(const Value& a, std::size_t i) {
    check(a->shape.size() == 1, "index: operand must be rank-1");
    check(i < a->shape[0], "index: out of range");
    Value r = make_op({}, {a->data[i]}, a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, i]() {
        a->grad_buffer()[i] += o->grad[0];
    };
    return r;
}

Value slice_cols(const Value& a, std::size_t first, std::size_t count) {
    check(a->shape.size() == 2, "slice_cols: operand must be rank-2");
    check(first + count <= a->shape[1], "slice_cols: range out of bounds");
    const std::size_t n = a->shape[0], m = a->shape[1];
    std::vector<double> out(n * count);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < count; ++j) out[i * count + j] = a->data[i * m + first + j];
    }
    Value r = make_op({n, count}, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, first, count, n, m]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < count; ++j) g[i * m + first + j] += o->grad[i * count + j];
        }
    };
    return r;
}

Value concat_cols(const std::vector<Value>& parts) {
    check(!parts.empty(), "concat_cols: no parts");
    const std::size_t n = parts[0]->shape[0];
    std::size_t total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        check(p->shape.size() == 2 && p->shape[0] == n, "concat_cols: row counts differ");
        total += p->shape[1];
        rg = rg || p->requires_grad;
    }
    std::vector<double> out(n * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t m = p->shape[1];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) out[i * total + off + j] = p->data[i * m + j];
        }
        off += m;
    }
    Value r = make_op({n, total}, std::move(out), rg);
    if (rg) r->backward = [o = r.get(), parts, n, total]() {
        std::size_t off = 0;
        for (const auto& p : parts) {
            const std::size_t m = p->shape[1];
            if (p->requires_grad) {
                auto& g = p->grad_buffer();
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < m; ++j) g[i * m + j] += o->grad[i * total + off + j];
                }
            }
            off += m;
        }
    };
    return r;
}

Value embed_rows(const Value& table, const std::vector<int>& ids) {
    check(table->shape.size() == 2, "embed_rows: table must be rank-2");
    const std::size_t v = table->shape[0], d = table->shape[1];
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        check(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < v, "embed_rows: id out of range");
        const double* src = table->data.data() + static_cast<std::size_t>(ids[i]) * d;
        std::copy(src, src + d, out.data() + i * d);
    }
    Value r = make_op({ids.size(), d}, std::move(out), table->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), table, ids, d]() {
        auto& g = table->grad_buffer();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double* dst = g.data() + static_cast<std::size_t>(ids[i]) * d;
            const double* src = o->grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    };
    return r;
}

Value gather_rows(const Value& a, const std::vector<std::size_t>& rows) {
    check(a->shape.size() == 2, "gather_rows: operand must be rank-2");
    const std::size_t d = a->shape[1];
    std::vector<double> out(rows.size() * d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        check(rows[i] < a->shape[0], "gather_rows: row index out of range");
        const double* src = a->data.data() + rows[i] * d;
        std::copy(src, src + d, out.data() + i * d);
    }
    Value r = make_op({rows.size(), d}, std::move(out), a->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), a, rows, d]() {
        auto& g = a->grad_buffer();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double* dst = g.data() + rows[i] * d;
            const double* src = o->grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    };
    return r;
}

Value cross_entropy(const Value& logits, std::size_t target) {
    check(logits->shape.size() == 1, "cross_entropy: logits must be rank-1");
    const std::size_t c = logits->shape[0];
    check(target < c, "cross_entropy: target class out of range");
    double mx = logits->data[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits->data[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(logits->data[j] - mx);
    const double loss = mx + std::log(z) - logits->data[target];
    Value r = make_op({}, {loss}, logits->requires_grad);
    if (r->requires_grad) r->backward = [o = r.get(), logits, target, mx, z, c]() {
        auto& g = logits->grad_buffer();
        const double go = o->grad[0];
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(logits->data[j] - mx) / z;
            g[j] += go * (p - (j == target ? 1.0 : 0.0));
        }
    };
    return r;
}

Value kl_divergence(const Value& p, const Value& q) {
    check(same_shape(p, q), "kl_divergence: shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < p->size(); ++i) {
        const double pi = p->data[i];
        const double lp = std::log(std::max(pi, kProbEpsilon));
        const double lq = std::log(std::max(q->data[i], kProbEpsilon));
        acc += pi * (lp - lq);
    }
    const bool rg = p->requires_grad || q->requires_grad;
    Value r = make_op({}, {acc}, rg);
    if (rg) r->backward = [o = r.get(), p, q]() {
        const double go = o->grad[0];
        if (p->requires_grad) {
            auto& g = p->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double pi = p->data[i];
                const double lp = std::log(std::max(pi, kProbEpsilon));
                const double lq = std::log(std::max(q->data[i], kProbEpsilon));
                g[i] += go * (lp - lq + (pi > kProbEpsilon ? 1.0 : 0.0));
            }
        }
        if (q->requires_grad) {
            auto& g = q->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double qi = q->data[i];
                if (qi > kProbEpsilon) g[i] -= go * p->data[i] / qi;
            }
        }
    };
    return r;
}

}  // namespace lenred::ad
