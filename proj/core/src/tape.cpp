// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/tape.hpp"

#include "styldiff/error.hpp"

namespace styldiff {
namespace {

thread_local Precision g_precision = Precision::f64;

}  // namespace

Precision compute_precision() noexcept { return g_precision; }

PrecisionScope::PrecisionScope(Precision precision) noexcept : previous_(g_precision) { g_precision = precision; }

PrecisionScope::~PrecisionScope() { g_precision = previous_; }

const NdArray& Var::value() const {
    if (!tape_) throw Error("Var: unbound handle");
    return tape_->value(index_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(index_); }

Var Tape::constant(NdArray value) {
    value.require_finite("constant");
    nodes_.push_back(Node{std::move(value), NdArray(), false, false, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(NdArray value) {
    value.require_finite("variable");
    nodes_.push_back(Node{std::move(value), NdArray(), mode_ == Mode::record, false, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(NdArray value, std::initializer_list<Var> inputs, const char* op, Backward backward) {
    return record(std::move(value), std::vector<Var>(inputs), op, std::move(backward));
}

Var Tape::record(NdArray value, const std::vector<Var>& inputs, const char* op, Backward backward) {
    value.require_finite(op);
    bool needs = false;
    for (const Var& in : inputs) {
        check_owned(in);
        needs = needs || nodes_[in.index()].requires_grad;
    }
    needs = needs && mode_ == Mode::record;
    nodes_.push_back(Node{std::move(value), NdArray(), needs, false, needs ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& loss) {
    check_owned(loss);
    if (swept_) throw Error("Tape::backward: tape already swept");
    const NdArray& lv = nodes_[loss.index()].value;
    if (lv.size() != 1) throw ShapeError("Tape::backward: loss must be a scalar, got " + to_string(lv.shape()));
    swept_ = true;
    if (!nodes_[loss.index()].requires_grad) return;
    grad_buffer(loss.index())[0] = 1.0;
    for (std::size_t i = loss.index() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.has_grad || !node.backward) continue;
        node.grad.require_finite("backward");
        node.backward(*this, node.grad);
    }
}

NdArray Tape::grad(const Var& v) const {
    check_owned(v);
    const Node& node = nodes_[v.index()];
    if (!node.has_grad) return NdArray(node.value.shape(), 0.0);
    return node.grad;
}

bool Tape::reached(const Var& v) const {
    check_owned(v);
    return nodes_[v.index()].has_grad;
}

NdArray& Tape::grad_buffer(std::size_t index) {
    Node& node = nodes_[index];
    if (!node.has_grad) {
        node.grad = NdArray(node.value.shape(), 0.0);
        node.has_grad = true;
    }
    return node.grad;
}

void Tape::accumulate_grad(std::size_t index, NdArray&& g) {
    Node& node = nodes_[index];
    if (g.shape() != node.value.shape()) {
        throw ShapeError("Tape: gradient " + to_string(g.shape()) + " for value " + to_string(node.value.shape()));
    }
    if (!node.has_grad) {
        node.grad = std::move(g);
        node.has_grad = true;
        return;
    }
    double* dst = node.grad.raw();
    const double* src = g.raw();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

void Tape::check_owned(const Var& v) const {
    if (!v.valid() || &v.tape() != this || v.index() >= nodes_.size()) throw Error("Tape: variable belongs to another tape");
}

}  // namespace styldiff
