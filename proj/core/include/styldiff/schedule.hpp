// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace styldiff {

/// Fixed variance schedule beta_t for t = 1..T with alpha_t = 1 - beta_t and
/// alpha_bar_t = prod_{s<=t} alpha_s. Index 0 is the clean image:
/// alpha_bar_0 = 1.
class NoiseSchedule {
public:
    static NoiseSchedule linear(int steps, double beta_start, double beta_end);
    static NoiseSchedule from_betas(std::vector<double> betas);

    int steps() const noexcept { return static_cast<int>(beta_.size()) - 1; }
    double beta(int t) const;
    double alpha(int t) const;
    /// Defined for t in [0, T].
    double alpha_bar(int t) const;

private:
    explicit NoiseSchedule(std::vector<double> betas);

    // Slot 0 holds the t = 0 convention (beta 0, alpha_bar 1).
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

/// Strictly increasing timesteps t_1 = 0 < ... < t_S = return step.
struct TimestepPlan {
    std::vector<int> steps;

    std::size_t size() const noexcept { return steps.size(); }
    int return_step() const { return steps.back(); }
    friend bool operator==(const TimestepPlan&, const TimestepPlan&) = default;
};

/// t_s = round((s-1) * return_step / (S-1)) with ties away from zero, bumped
/// upward where needed to stay strictly increasing.
TimestepPlan make_plan(int count, int return_step, int total_steps);

/// Throws DomainError unless `plan` is a valid plan within [0, total_steps].
void validate_plan(const TimestepPlan& plan, int total_steps);

}  // namespace styldiff
