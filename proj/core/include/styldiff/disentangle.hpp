// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "styldiff/ndarray.hpp"
#include "styldiff/tape.hpp"

namespace styldiff {

/// Frozen random-feature embedding standing in for a pretrained image
/// encoder. Three stride-2 3x3 conv stages (16, 32, 64 channels, replicate
/// padding, leaky slope 0.2, no bias); the embedding concatenates, per
/// stage, the per-channel spatial mean and standard deviation.
class Projector {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x53444C50;
    static constexpr std::array<std::size_t, 3> kStageChannels = {16, 32, 64};
    static constexpr std::size_t kEmbeddingSize = 224;
    static constexpr std::size_t kMinSide = 8;

    explicit Projector(std::uint64_t seed = kDefaultSeed);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::array<NdArray, 3>& weights() const noexcept { return weights_; }

    /// Stage feature maps of `x` [N, 3, H, W].
    std::vector<Var> features(const Var& x) const;
    /// [N, 3, H, W] -> [N, 224].
    Var embed(const Var& x) const;
    /// `{3, H, W}` -> `{224}` or `{N, 3, H, W}` -> `{N, 224}`.
    NdArray embed(const NdArray& img) const;

private:
    std::uint64_t seed_;
    std::array<NdArray, 3> weights_;
};

struct LossWeights {
    double lambda_l1 = 10.0;
    double lambda_dir = 1.0;
    void validate() const;
};

/// I - Ic; the naive pixel-space style direction.
NdArray pixel_style_direction(const NdArray& I, const NdArray& Ic);
/// E(I) - E(Ic) for single images.
NdArray style_direction(const Projector& proj, const NdArray& I, const NdArray& Ic);

/// Mean absolute difference of two equally sized vectors.
Var loss_l1(const Var& d_cs, const Var& d_s);
/// 1 - cos(d_cs, d_s); DomainError if either norm is zero.
Var loss_dir(const Var& d_cs, const Var& d_s);

struct SdLoss {
    Var total;
    Var l1;
    Var dir;
};

/// Weighted combination of loss_l1 and loss_dir on given directions.
SdLoss combine_sd(const Var& d_cs, const Var& d_s, const LossWeights& w);

/// Disentanglement loss with D_cs = E(I_cs) - E(I_c^c) and
/// D_s = E(I_s) - E(I_s^c); differentiable in I_cs, which is [1, 3, H, W].
SdLoss loss_sd(const Projector& proj, const NdArray& content_c, const Var& stylized, const NdArray& style_c,
               const NdArray& style, const LossWeights& w);

/// Mean absolute pixel difference.
Var loss_sr(const Var& reconstruction, const Var& style);

/// Sum over stages of the squared Frobenius distance between Gram matrices
/// F F^T / (C H W) of each image's feature maps, summed over the batch.
Var gram_distance(std::span<const Var> features_a, std::span<const Var> features_b);
Var gram_loss(const Projector& proj, const Var& a, const Var& b);
double gram_loss(const Projector& proj, const NdArray& a, const NdArray& b);

// Synthetic collapse experiment: a free embedding-sized vector D_cs is
// optimised towards a fixed target D_s under the L1-only objective and under
// the combined objective, from the same random starts.
struct CollapseOptions {
    int runs = 100;
    int steps = 300;
    double lr = 0.002;
    std::size_t dims = Projector::kEmbeddingSize;
    /// Standard deviations of the Gaussian target and starting vectors;
    /// style directions are small differences of embeddings.
    double target_scale = 0.01;
    double init_scale = 0.01;
    std::uint64_t seed = 0;
    LossWeights weights;
};

struct CollapseResult {
    std::vector<double> cos_l1;
    std::vector<double> cos_combined;
    double mean_l1 = 0.0;
    double mean_combined = 0.0;
    double min_combined = 0.0;
};

CollapseResult run_collapse_experiment(const CollapseOptions& options);

}  // namespace styldiff
