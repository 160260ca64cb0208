// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "styldiff/ndarray.hpp"
#include "styldiff/tape.hpp"

namespace styldiff {

/// Ordered, uniquely named collection of trainable arrays. Insertion order is
/// the canonical order for optimizer state and serialisation.
///
/// With Precision::f32 storage every value is kept representable as a 32-bit
/// float, so checkpoints written at 32 bits reload bit-exactly.
class ParamSet {
public:
    void add(std::string name, NdArray value);

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t total_elements() const noexcept;
    bool contains(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    const std::string& name(std::size_t i) const { return names_.at(i); }
    const NdArray& value(std::size_t i) const { return values_.at(i); }
    NdArray& value(std::size_t i) { return values_.at(i); }
    const NdArray& at(std::string_view name) const { return values_[index_of(name)]; }
    NdArray& at(std::string_view name) { return values_[index_of(name)]; }

    Precision storage() const noexcept { return storage_; }
    /// Switching to f32 rounds every value to the nearest float.
    void set_storage(Precision storage);

    /// Same names in the same order with matching shapes.
    bool aligned_with(const ParamSet& other) const;

private:
    std::vector<std::string> names_;
    std::vector<NdArray> values_;
    std::unordered_map<std::string, std::size_t> index_;
    Precision storage_ = Precision::f64;
};

/// Rounds every element to the nearest 32-bit float.
void round_to_f32(NdArray& a);

/// Params of a ParamSet placed on a tape as trainable leaves.
class BoundParams {
public:
    BoundParams(Tape& tape, const ParamSet& params);

    const Var& operator[](std::string_view name) const;
    const Var& at(std::size_t i) const { return vars_.at(i); }
    const ParamSet& set() const noexcept { return *params_; }
    Tape& tape() const noexcept { return *tape_; }

private:
    Tape* tape_;
    const ParamSet* params_;
    std::vector<Var> vars_;
};

enum class GradMode {
    lenient,  // params off the recorded path get zero gradients
    strict    // params off the recorded path are an error
};

/// Runs the reverse sweep and returns d loss / d p for every bound param,
/// aligned with the ParamSet order.
ParamSet grad(const Var& loss, const BoundParams& params, GradMode mode = GradMode::lenient);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::int64_t step = 0;
    std::vector<NdArray> m;
    std::vector<NdArray> v;
};

AdamState make_adam_state(const ParamSet& params, AdamHyper hyper = {});

/// One bias-corrected Adam update. Moments follow the params' storage
/// precision.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr);

}  // namespace styldiff
