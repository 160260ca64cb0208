// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/diffusion.hpp"

#include <cmath>
#include <string>

#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {
namespace {

void require_timestep(int t, int lo, const NoiseSchedule& sched, const char* op) {
    if (t < lo || t > sched.steps()) {
        throw DomainError(std::string(op) + ": t=" + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(sched.steps()) + "]");
    }
}

// predict_x0 without the t >= 1 guard; at t = 0 it returns x_t unchanged.
NdArray x0_estimate(const NdArray& x_t, int t, const NdArray& eps_pred, const NoiseSchedule& sched) {
    const double ab = sched.alpha_bar(t);
    const double inv = 1.0 / std::sqrt(ab);
    return axpby(inv, x_t, -std::sqrt(1.0 - ab) * inv, eps_pred);
}

NdArray reverse_step(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred, double sigma,
                     const NdArray* z, const NoiseSchedule& sched) {
    require_same_shape(x_t, eps_pred, "ddim step");
    const NdArray f = x0_estimate(x_t, t_from, eps_pred, sched);
    const double ab_to = sched.alpha_bar(t_to);
    const double var = 1.0 - ab_to - sigma * sigma;
    if (var < 0.0) throw DomainError("ddim step: sigma^2 exceeds 1 - alpha_bar_to");
    NdArray out = axpby(std::sqrt(ab_to), f, std::sqrt(var), eps_pred);
    if (z) out = axpby(1.0, out, sigma, *z);
    return out;
}

}  // namespace

NdArray q_sample(const NdArray& x0, int t, const NdArray& eps, const NoiseSchedule& sched) {
    require_timestep(t, 0, sched, "q_sample");
    require_same_shape(x0, eps, "q_sample");
    const double ab = sched.alpha_bar(t);
    return axpby(std::sqrt(ab), x0, std::sqrt(1.0 - ab), eps);
}

NdArray predict_x0(const NdArray& x_t, int t, const NdArray& eps_pred, const NoiseSchedule& sched) {
    require_timestep(t, 1, sched, "predict_x0");
    require_same_shape(x_t, eps_pred, "predict_x0");
    return x0_estimate(x_t, t, eps_pred, sched);
}

Var predict_x0(const Var& x_t, int t, const Var& eps_pred, const NoiseSchedule& sched) {
    require_timestep(t, 1, sched, "predict_x0");
    const double ab = sched.alpha_bar(t);
    const double inv = 1.0 / std::sqrt(ab);
    return scale(x_t, inv) - scale(eps_pred, std::sqrt(1.0 - ab) * inv);
}

NdArray ddim_step_general(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred, double sigma,
                          const NdArray* z, const NoiseSchedule& sched) {
    require_timestep(t_from, 1, sched, "ddim_step_general");
    require_timestep(t_to, 0, sched, "ddim_step_general");
    if (t_to >= t_from) throw DomainError("ddim_step_general: need t_to < t_from");
    if (!(sigma >= 0.0)) throw DomainError("ddim_step_general: sigma must be non-negative");
    if ((sigma > 0.0) != (z != nullptr)) throw DomainError("ddim_step_general: z must be given iff sigma > 0");
    if (z) require_same_shape(x_t, *z, "ddim_step_general");
    return reverse_step(x_t, t_from, t_to, eps_pred, sigma, z, sched);
}

NdArray ddim_reverse_step(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred,
                          const NoiseSchedule& sched) {
    require_timestep(t_from, 1, sched, "ddim_reverse_step");
    require_timestep(t_to, 0, sched, "ddim_reverse_step");
    if (t_to > t_from) throw DomainError("ddim_reverse_step: need t_to <= t_from");
    return reverse_step(x_t, t_from, t_to, eps_pred, 0.0, nullptr, sched);
}

NdArray ddim_forward_step(const NdArray& x_t, int t_from, int t_to, const NdArray& eps_pred,
                          const NoiseSchedule& sched) {
    require_timestep(t_from, 0, sched, "ddim_forward_step");
    require_timestep(t_to, 0, sched, "ddim_forward_step");
    if (t_to <= t_from) throw DomainError("ddim_forward_step: need t_to > t_from");
    require_same_shape(x_t, eps_pred, "ddim_forward_step");
    const NdArray f = x0_estimate(x_t, t_from, eps_pred, sched);
    const double ab_to = sched.alpha_bar(t_to);
    return axpby(std::sqrt(ab_to), f, std::sqrt(1.0 - ab_to), eps_pred);
}

NdArray ddpm_reverse_step(const NdArray& x_t, int t, const NdArray& eps_pred, const NdArray& z,
                          const NoiseSchedule& sched) {
    require_timestep(t, 1, sched, "ddpm_reverse_step");
    require_same_shape(x_t, eps_pred, "ddpm_reverse_step");
    require_same_shape(x_t, z, "ddpm_reverse_step");
    const double a = sched.alpha(t);
    const double inv = 1.0 / std::sqrt(a);
    NdArray mean = axpby(inv, x_t, -inv * (1.0 - a) / std::sqrt(1.0 - sched.alpha_bar(t)), eps_pred);
    return axpby(1.0, mean, std::sqrt(sched.beta(t)), z);
}

NdArray invert(const NdArray& x0, const TimestepPlan& plan, const NoisePredictor& den, const NoiseSchedule& sched) {
    validate_plan(plan, sched.steps());
    NdArray x = x0;
    for (std::size_t s = 0; s + 1 < plan.size(); ++s) {
        const NdArray eps = den.predict_noise(x, query_timestep(plan.steps[s]));
        x = ddim_forward_step(x, plan.steps[s], plan.steps[s + 1], eps, sched);
    }
    return x;
}

ChainResult generate(const NdArray& latent, const TimestepPlan& plan, const NoisePredictor& den,
                     const NoiseSchedule& sched, bool capture, const std::optional<StochasticStart>& stochastic_start) {
    validate_plan(plan, sched.steps());
    ChainResult result;
    NdArray x = latent;
    if (stochastic_start) {
        Rng rng(stochastic_start->seed);
        const NdArray noise = rng.normal_array(stochastic_start->x0.shape());
        x = q_sample(stochastic_start->x0, plan.return_step(), noise, sched);
    }
    for (std::size_t s = plan.size() - 1; s >= 1; --s) {
        const int t = plan.steps[s];
        const NdArray eps = den.predict_noise(x, t);
        if (capture) result.predictions.push_back(predict_x0(x, t, eps, sched));
        x = ddim_reverse_step(x, t, plan.steps[s - 1], eps, sched);
    }
    result.final = std::move(x);
    return result;
}

}  // namespace styldiff
