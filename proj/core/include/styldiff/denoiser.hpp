// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "styldiff/diffusion.hpp"
#include "styldiff/params.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {

struct DenoiserConfig {
    int image_size = 32;
    int base_width = 32;
    /// Number of resolutions; level l runs at width base_width * 2^l.
    int levels = 2;
    int time_embed_dim = 64;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

std::string to_string(const DenoiserConfig& config);

/// A predictor whose output is a differentiable function of a ParamSet.
class TrainableDenoiser : public NoisePredictor {
public:
    virtual const ParamSet& params() const = 0;
    virtual ParamSet& params() = 0;

    /// `x` is `{N, 3, H, W}`; `t` holds one timestep per batch element.
    virtual Var forward(const BoundParams& weights, const Var& x, std::span<const int> t) const = 0;

    /// Evaluates forward() on an inference tape at the calling thread's
    /// kernel precision.
    NdArray predict_noise(const NdArray& x, int t) const override;
};

/// Tiny residual U-Net with sinusoidal timestep conditioning.
class UNetDenoiser final : public TrainableDenoiser {
public:
    static constexpr std::uint16_t kFormatVersion = 1;

    /// Seeded Gaussian initialisation, std sqrt(2 / fan_in), zero biases,
    /// unit affine scales.
    explicit UNetDenoiser(const DenoiserConfig& config);
    UNetDenoiser(const DenoiserConfig& config, ParamSet params);

    const DenoiserConfig& config() const noexcept { return config_; }
    const ParamSet& params() const override { return params_; }
    ParamSet& params() override { return params_; }

    Var forward(const BoundParams& weights, const Var& x, std::span<const int> t) const override;

    void save(const std::filesystem::path& path) const;
    static UNetDenoiser load(const std::filesystem::path& path);
    /// Also throws ConfigMismatchError unless the stored config equals `expected`.
    static UNetDenoiser load(const std::filesystem::path& path, const DenoiserConfig& expected);

private:
    Var res_block(const BoundParams& w, const std::string& prefix, const Var& h, const Var& temb) const;

    DenoiserConfig config_;
    ParamSet params_;
};

/// eps = a * x + b with two scalar params; a stand-in network for gradient
/// and pipeline checks.
class AffineDenoiser final : public TrainableDenoiser {
public:
    AffineDenoiser(double a, double b);

    const ParamSet& params() const override { return params_; }
    ParamSet& params() override { return params_; }
    Var forward(const BoundParams& weights, const Var& x, std::span<const int> t) const override;

private:
    ParamSet params_;
};

/// Bayes-optimal noise prediction for x0 ~ N(mean, diag(var)).
class LinearGaussianOracle final : public NoisePredictor {
public:
    /// `mean` and `var` are single images; var must be positive.
    LinearGaussianOracle(NdArray mean, NdArray var, const NoiseSchedule& sched);

    /// E[x0 | x_t] per coordinate.
    NdArray posterior_mean(const NdArray& x, int t) const;
    /// Throws DomainError at t = 0, where the noise scale vanishes.
    NdArray predict_noise(const NdArray& x, int t) const override;

private:
    NdArray mean_;
    NdArray var_;
    const NoiseSchedule* sched_;
};

/// CRC32 over parameter names and raw values; identifies a parameter state.
std::uint32_t param_checksum(const ParamSet& params);

struct PretrainOptions {
    int steps = 20000;
    double lr = 2e-4;
    int batch = 16;
    std::uint64_t seed = 0;
    AdamHyper adam;
    /// Called after every step with (completed steps, loss).
    std::function<void(int, double)> on_step;
};

/// Everything needed to continue a run bit-exactly.
struct TrainingState {
    AdamState adam;
    std::string rng_state;
    std::int64_t steps_done = 0;

    void save(const std::filesystem::path& path, const ParamSet& params) const;
    static TrainingState load(const std::filesystem::path& path, const ParamSet& params);
};

struct PretrainResult {
    std::vector<double> losses;
    TrainingState state;
};

/// Minimises the mean squared error between predicted and injected noise,
/// t ~ U[1, T]. Updates `model` in place. A non-finite loss throws
/// NonFiniteError naming the step.
PretrainResult pretrain(TrainableDenoiser& model, std::span<const NdArray> dataset, const NoiseSchedule& sched,
                        const PretrainOptions& options, std::optional<TrainingState> resume = std::nullopt);

}  // namespace styldiff
