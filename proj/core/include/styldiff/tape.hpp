// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>

#include "styldiff/ndarray.hpp"

namespace styldiff {

/// Arithmetic precision used by the GEMM-backed kernels (convolutions and
/// matrix products). Everything else always runs in 64-bit.
enum class Precision { f64, f32 };

Precision compute_precision() noexcept;

/// Sets the calling thread's kernel precision for the scope's lifetime.
class PrecisionScope {
public:
    explicit PrecisionScope(Precision precision) noexcept;
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    Precision previous_;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape lives.
class Var {
public:
    Var() = default;

    const NdArray& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    bool valid() const noexcept { return tape_ != nullptr; }
    Tape& tape() const { return *tape_; }
    std::size_t index() const noexcept { return index_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t index) noexcept : tape_(tape), index_(index) {}

    Tape* tape_ = nullptr;
    std::size_t index_ = 0;
};

/// Record/replay tape for one loss evaluation.
///
/// In Mode::inference nothing is marked as requiring gradients, so ops store
/// no backward closures and evaluation costs only the forward arithmetic.
class Tape {
public:
    enum class Mode { record, inference };
    /// Receives the gradient flowing into the node's output.
    using Backward = std::function<void(Tape&, const NdArray& out_grad)>;

    explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Mode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    Var constant(NdArray value);
    /// A trainable leaf. Behaves as a constant on an inference tape.
    Var variable(NdArray value);

    /// Appends an op result. `backward` is kept only if an input requires
    /// gradients; the value is checked for finiteness.
    Var record(NdArray value, std::initializer_list<Var> inputs, const char* op, Backward backward);
    Var record(NdArray value, const std::vector<Var>& inputs, const char* op, Backward backward);

    /// Reverse sweep from a one-element `loss`. A tape supports one sweep.
    void backward(const Var& loss);

    /// d loss / d v after backward(); zeros when no gradient reached v.
    NdArray grad(const Var& v) const;
    bool reached(const Var& v) const;

    const NdArray& value(std::size_t index) const { return nodes_[index].value; }
    bool requires_grad(std::size_t index) const { return nodes_[index].requires_grad; }
    /// Zero-initialised accumulation buffer, for use inside Backward closures.
    NdArray& grad_buffer(std::size_t index);
    /// Adds `g` to the node's gradient, taking ownership when it is the
    /// first contribution.
    void accumulate_grad(std::size_t index, NdArray&& g);

private:
    struct Node {
        NdArray value;
        NdArray grad;
        bool requires_grad = false;
        bool has_grad = false;
        Backward backward;
    };

    void check_owned(const Var& v) const;

    Mode mode_;
    bool swept_ = false;
    std::deque<Node> nodes_;
};

}  // namespace styldiff
