// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "styldiff/ndarray.hpp"
#include "styldiff/schedule.hpp"
#include "styldiff/tape.hpp"

namespace styldiff {

/// Anything that predicts the noise in x_t. Implementations must be safe to
/// share between threads for read-only evaluation.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    /// `x` is `{N, 3, H, W}` or `{3, H, W}`; the result has the same shape.
    virtual NdArray predict_noise(const NdArray& x, int t) const = 0;
};

/// Timestep at which chains query the predictor for plan entry `t`: the clean
/// level t = 0 is queried at t = 1, the first level the predictor was fit on.
inline int query_timestep(int t) noexcept { return t < 1 ? 1 : t; }

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
NdArray q_sample(const NdArray& x0, int t, const NdArray& eps, const NoiseSchedule& sched);

/// f(x_t, t) = (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t), t >= 1.
NdArray predict_x0(const NdArray& x_t, int t, const NdArray& eps_pred, const NoiseSchedule& sched);
Var predict_x0(const Var& x_t, int t, const Var& eps_pred, const NoiseSchedule& sched);

/// Generalised reverse step
/// sqrt(ab_to) f + sqrt(1 - ab_to - sigma^2) eps + sigma z, with t_to < t_from.
/// `z` must be present exactly when sigma > 0.
NdArray ddim_step_general(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred, double sigma,
                          const NdArray* z, const NoiseSchedule& sched);

/// Deterministic reverse step (sigma = 0), t_to <= t_from.
NdArray ddim_reverse_step(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred,
                          const NoiseSchedule& sched);

/// Deterministic forward (inversion) step sqrt(ab_to) f + sqrt(1 - ab_to) eps,
/// t_to > t_from >= 0. At t_from = 0, f = x_t.
NdArray ddim_forward_step(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred,
                          const NoiseSchedule& sched);

/// Ancestral step with sigma_t^2 = beta_t.
NdArray ddpm_reverse_step(const NdArray& x_t, int t, const NdArray& eps_pred, const NdArray& z,
                          const NoiseSchedule& sched);

/// Deterministic inversion of x0 along the plan (t_1 -> ... -> t_S).
NdArray invert(const NdArray& x0, const TimestepPlan& plan, const NoisePredictor& den, const NoiseSchedule& sched);

struct ChainResult {
    NdArray final;
    /// f(x_{t_s}, t_s) for s = S down to 2, when captured.
    std::vector<NdArray> predictions;
};

/// Replaces the latent with q_sample(x0, T_return, eps) before reversing.
struct StochasticStart {
    NdArray x0;
    std::uint64_t seed = 0;
};

/// Deterministic reverse chain t_S -> ... -> t_1 = 0.
ChainResult generate(const NdArray& latent, const TimestepPlan& plan, const NoisePredictor& den,
                     const NoiseSchedule& sched, bool capture = false,
                     const std::optional<StochasticStart>& stochastic_start = std::nullopt);

}  // namespace styldiff
