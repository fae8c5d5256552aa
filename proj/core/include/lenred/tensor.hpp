// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense double arrays.
//
// Nodes form a DAG; operation nodes are recorded on the active Tape in
// topological (creation) order. backward() seeds a scalar root with
// gradient 1 and replays the tape in reverse, accumulating additively
// into every node that requires a gradient. Leaves (parameters) live
// across tapes; their gradients persist until explicitly zeroed.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "lenred/common.hpp"

namespace lenred::ad {

struct Node {
    std::vector<std::size_t> shape;  // {} scalar, {n} vector, {n,m} matrix
    std::vector<double> data;
    std::vector<double> grad;        // lazily sized; empty until touched
    bool requires_grad = false;
    std::function<void()> backward;  // null for leaves

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1 && shape.empty(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }

    // Gradient buffer, allocated zero-filled on first touch.
    std::vector<double>& grad_buffer() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
        return grad;
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), 0.0);
    }
};

using Value = std::shared_ptr<Node>;

Value leaf(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad = false);
Value scalar(double v, bool requires_grad = false);
Value zeros(std::vector<std::size_t> shape, bool requires_grad = false);

// One forward pass worth of recorded operations. Construction pushes the
// tape onto a thread-local stack; operations always record onto the
// innermost tape. A tape accepts at most one backward pass. Independent
// tapes on different threads never share state; parameters shared
// between them are read-only during the pass.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(const Value& v);

    // Reverse sweep from a scalar root. Throws UsageError for non-scalar
    // roots or if this tape was already consumed.
    void backward(const Value& root);

    void clear();
    std::size_t recorded() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    static Tape& current();      // throws UsageError when no tape is active
    static bool has_current();

private:
    std::vector<Value> nodes_;
    bool consumed_ = false;
};

// Registers an operation node: shape/data as computed, requires_grad
// inherited from parents. Recorded on the current tape only when a
// gradient can flow; the caller then assigns node->backward. Backward
// rules must capture the output node by raw pointer (the rule lives on
// that node) and parents by Value to keep them alive.
Value make_op(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad);

}  // namespace lenred::ad
