// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/tensor.hpp"

#include <numeric>

namespace lenred::ad {

namespace {
thread_local std::vector<Tape*> g_tape_stack;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    return n;
}
}  // namespace

Value leaf(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
    if (shape_size(shape) != data.size()) {
        throw ConfigError("leaf: shape does not match data size");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return node;
}

Value scalar(double v, bool requires_grad) {
    return leaf({}, {v}, requires_grad);
}

Value zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::vector<double> data(shape_size(shape), 0.0);
    return leaf(std::move(shape), std::move(data), requires_grad);
}

Tape::Tape() {
    g_tape_stack.push_back(this);
}

Tape::~Tape() {
    if (!g_tape_stack.empty() && g_tape_stack.back() == this) {
        g_tape_stack.pop_back();
    }
    clear();
}

void Tape::record(const Value& v) {
    nodes_.push_back(v);
}

void Tape::backward(const Value& root) {
    if (!root || !root->is_scalar()) {
        throw UsageError("backward: root must be a scalar node");
    }
    if (consumed_) {
        throw UsageError("backward: tape already consumed by a backward pass");
    }
    consumed_ = true;
    root->grad_buffer()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& node = **it;
        if (node.requires_grad && node.backward && !node.grad.empty()) {
            node.backward();
        }
    }
}

void Tape::clear() {
    nodes_.clear();
}

Tape& Tape::current() {
    if (g_tape_stack.empty()) {
        throw UsageError("no active tape: construct an ad::Tape before running operations");
    }
    return *g_tape_stack.back();
}

bool Tape::has_current() {
    return !g_tape_stack.empty();
}

Value make_op(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
    if (shape_size(shape) != data.size()) {
        throw ConfigError("make_op: shape does not match data size");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    if (requires_grad) {
        Tape::current().record(node);
    }
    return node;
}

}  // namespace lenred::ad
