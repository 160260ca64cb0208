// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/schedule.hpp"

#include <string>

#include "styldiff/error.hpp"

namespace styldiff {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw DomainError("linear_schedule: need T >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw DomainError("linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
        betas[static_cast<std::size_t>(t - 1)] = beta_start + frac * (beta_end - beta_start);
    }
    betas.back() = beta_end;
    return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) { return NoiseSchedule(std::move(betas)); }

NoiseSchedule::NoiseSchedule(std::vector<double> betas) {
    if (betas.empty()) throw DomainError("NoiseSchedule: empty schedule");
    beta_.reserve(betas.size() + 1);
    beta_.push_back(0.0);
    alpha_.push_back(1.0);
    alpha_bar_.push_back(1.0);
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) throw DomainError("NoiseSchedule: beta must lie in (0, 1)");
        beta_.push_back(b);
        alpha_.push_back(1.0 - b);
        alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
    }
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > steps()) throw DomainError("beta: t=" + std::to_string(t) + " outside [1, T]");
    return beta_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha(int t) const {
    if (t < 1 || t > steps()) throw DomainError("alpha: t=" + std::to_string(t) + " outside [1, T]");
    return alpha_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > steps()) throw DomainError("alpha_bar: t=" + std::to_string(t) + " outside [0, T]");
    return alpha_bar_[static_cast<std::size_t>(t)];
}

TimestepPlan make_plan(int count, int return_step, int total_steps) {
    if (count < 2) throw DomainError("make_plan: need S >= 2");
    if (return_step < 1 || return_step > total_steps) throw DomainError("make_plan: need 1 <= T_return <= T");
    if (count > return_step + 1) {
        throw DomainError("make_plan: S=" + std::to_string(count) + " cannot be strictly increasing over [0, " +
                          std::to_string(return_step) + "]");
    }
    TimestepPlan plan;
    plan.steps.reserve(static_cast<std::size_t>(count));
    const long long den = count - 1;
    for (long long s = 0; s < count; ++s) {
        // round(s * R / (S-1)) for non-negative operands, half away from zero.
        const long long num = s * return_step;
        int t = static_cast<int>((2 * num + den) / (2 * den));
        if (!plan.steps.empty() && t <= plan.steps.back()) t = plan.steps.back() + 1;
        plan.steps.push_back(t);
    }
    validate_plan(plan, total_steps);
    return plan;
}

void validate_plan(const TimestepPlan& plan, int total_steps) {
    if (plan.steps.size() < 2) throw DomainError("plan: need at least 2 timesteps");
    if (plan.steps.front() != 0) throw DomainError("plan: first timestep must be 0");
    for (std::size_t i = 1; i < plan.steps.size(); ++i) {
        if (plan.steps[i] <= plan.steps[i - 1]) throw DomainError("plan: timesteps must be strictly increasing");
    }
    if (plan.steps.back() > total_steps) throw DomainError("plan: return step exceeds T");
}

}  // namespace styldiff
