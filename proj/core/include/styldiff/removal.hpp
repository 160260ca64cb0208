// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "styldiff/diffusion.hpp"
#include "styldiff/ndarray.hpp"
#include "styldiff/schedule.hpp"

namespace styldiff {

struct RemovalConfig {
    int T_remov = 601;
    int S_for = 40;
    int S_rev = 40;
    int K_r = 5;
    /// Photographs are already in the denoiser's domain: grayscale only.
    bool skip_diffusion = false;

    void validate(int total_steps) const;

    static RemovalConfig artistic() { return {}; }
    /// Smaller return step for photo-realistic style images.
    static RemovalConfig photo() {
        RemovalConfig c;
        c.T_remov = 401;
        return c;
    }
};

/// Luma decolouring followed by K_r deterministic invert/generate round
/// trips through the photo-domain denoiser. `img` may be a single image or a
/// batch; images in a batch are processed independently. The result is not
/// clamped.
NdArray remove_style_raw(const NdArray& img, const RemovalConfig& cfg, const NoisePredictor& den,
                         const NoiseSchedule& sched);

/// remove_style_raw() clamped to [-1, 1].
NdArray remove_style(const NdArray& img, const RemovalConfig& cfg, const NoisePredictor& den,
                     const NoiseSchedule& sched);

}  // namespace styldiff
