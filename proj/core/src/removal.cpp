// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/removal.hpp"

#include "styldiff/error.hpp"
#include "styldiff/image.hpp"

namespace styldiff {

void RemovalConfig::validate(int total_steps) const {
    if (T_remov < 1 || T_remov > total_steps) throw ConfigError("removal: T_remov must lie in [1, T]");
    if (S_for < 2 || S_rev < 2) throw ConfigError("removal: S_for and S_rev must be >= 2");
    if (K_r < 0) throw ConfigError("removal: K_r must be non-negative");
}

NdArray remove_style_raw(const NdArray& img, const RemovalConfig& cfg, const NoisePredictor& den,
                         const NoiseSchedule& sched) {
    cfg.validate(sched.steps());
    // The grayscale image, not the original, enters the diffusion loop.
    NdArray x = luma(img);
    if (cfg.skip_diffusion) return x;
    const TimestepPlan forward = make_plan(cfg.S_for, cfg.T_remov, sched.steps());
    const TimestepPlan reverse = make_plan(cfg.S_rev, cfg.T_remov, sched.steps());
    for (int k = 0; k < cfg.K_r; ++k) {
        x = generate(invert(x, forward, den, sched), reverse, den, sched).final;
    }
    return x;
}

NdArray remove_style(const NdArray& img, const RemovalConfig& cfg, const NoisePredictor& den,
                     const NoiseSchedule& sched) {
    return clamp(remove_style_raw(img, cfg, den, sched), -1.0, 1.0);
}

}  // namespace styldiff
