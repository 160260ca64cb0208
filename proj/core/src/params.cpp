// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/params.hpp"

#include <cmath>

#include "styldiff/error.hpp"

namespace styldiff {

void round_to_f32(NdArray& a) {
    for (double& v : a.data()) v = static_cast<double>(static_cast<float>(v));
}

void ParamSet::add(std::string name, NdArray value) {
    if (index_.contains(name)) throw DomainError("ParamSet: duplicate name '" + name + "'");
    if (storage_ == Precision::f32) round_to_f32(value);
    index_.emplace(name, values_.size());
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

std::size_t ParamSet::total_elements() const noexcept {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

bool ParamSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamSet::index_of(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw DomainError("ParamSet: no parameter named '" + std::string(name) + "'");
    return it->second;
}

void ParamSet::set_storage(Precision storage) {
    storage_ = storage;
    if (storage_ == Precision::f32) {
        for (auto& v : values_) round_to_f32(v);
    }
}

bool ParamSet::aligned_with(const ParamSet& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i].shape() != other.values_[i].shape()) return false;
    }
    return true;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params) : tape_(&tape), params_(&params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.variable(params.value(i)));
}

const Var& BoundParams::operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }

ParamSet grad(const Var& loss, const BoundParams& params, GradMode mode) {
    Tape& tape = params.tape();
    if (!loss.valid() || &loss.tape() != &tape) throw Error("grad: loss was not recorded on the params' tape");
    if (loss.value().size() != 1) throw ShapeError("grad: loss must be a scalar, got " + to_string(loss.shape()));
    tape.backward(loss);
    ParamSet out;
    for (std::size_t i = 0; i < params.set().size(); ++i) {
        const Var& v = params.at(i);
        if (mode == GradMode::strict && !tape.reached(v)) {
            throw DomainError("grad: parameter '" + params.set().name(i) + "' is not on the recorded path");
        }
        out.add(params.set().name(i), tape.grad(v));
    }
    return out;
}

AdamState make_adam_state(const ParamSet& params, AdamHyper hyper) {
    AdamState state;
    state.hyper = hyper;
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m.emplace_back(params.value(i).shape(), 0.0);
        state.v.emplace_back(params.value(i).shape(), 0.0);
    }
    return state;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr) {
    if (!params.aligned_with(grads)) throw ShapeError("adam_step: gradients do not match parameters");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state does not match parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].shape() != params.value(i).shape() || state.v[i].shape() != params.value(i).shape()) {
            throw ShapeError("adam_step: moment shape mismatch for '" + params.name(i) + "'");
        }
        if (!grads.value(i).all_finite()) {
            throw NonFiniteError("adam_step: non-finite gradient for '" + params.name(i) + "'");
        }
    }
    if (!std::isfinite(lr)) throw NonFiniteError("adam_step: non-finite learning rate");
    const AdamHyper& h = state.hyper;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    const bool f32 = params.storage() == Precision::f32;
    for (std::size_t i = 0; i < params.size(); ++i) {
        NdArray& p = params.value(i);
        NdArray& m = state.m[i];
        NdArray& v = state.v[i];
        const NdArray& g = grads.value(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            if (f32) {
                m[j] = static_cast<float>(m[j]);
                v[j] = static_cast<float>(v[j]);
            }
            if (lr == 0.0) continue;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            double next = p[j] - lr * m_hat / (std::sqrt(v_hat) + h.eps);
            if (f32) next = static_cast<float>(next);
            p[j] = next;
        }
        p.require_finite("adam_step");
    }
}

}  // namespace styldiff
