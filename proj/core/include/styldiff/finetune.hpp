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

#include "styldiff/denoiser.hpp"
#include "styldiff/disentangle.hpp"
#include "styldiff/schedule.hpp"

namespace styldiff {

struct FinetuneConfig {
    int T_trans = 301;
    int S_for = 40;
    int S_rev = 6;
    int epochs = 5;
    int K_s = 50;
    int n_contents = 16;
    double base_lr = 1e-4;
    /// lr for epoch k (from 0) is base_lr * (1 + lr_growth * k).
    double lr_growth = 0.2;
    LossWeights weights;
    /// Runs the style-reconstruction substep; off only for ablations.
    bool sr_substep = true;
    std::uint64_t seed = 0;

    double lr_at(int epoch) const { return base_lr * (1.0 + lr_growth * epoch); }
    void validate(int total_steps) const;

    /// The large-model settings: 50 contents at lr 4e-6.
    static FinetuneConfig large_scale();
};

/// Inverted contents and style content, tagged with the plan and base model
/// they were produced under.
struct LatentStore {
    static constexpr std::uint16_t kFormatVersion = 1;

    TimestepPlan plan;
    std::uint32_t denoiser_checksum = 0;
    std::vector<std::string> content_ids;
    std::vector<NdArray> content_latents;
    std::string style_id;
    NdArray style_latent;

    /// Throws ProvenanceError, quoting both values, unless plan and checksum
    /// match.
    void require_provenance(const TimestepPlan& expected_plan, std::uint32_t expected_checksum) const;

    void save(const std::filesystem::path& path) const;
    static LatentStore load(const std::filesystem::path& path);
};

/// Inverts every image along make_plan(S_for, T_trans) with the base model.
LatentStore precompute_latents(std::span<const NdArray> contents, std::span<const std::string> content_ids,
                               const NdArray& style_content, const std::string& style_id, const FinetuneConfig& cfg,
                               const TrainableDenoiser& base, const NoiseSchedule& sched);

struct FinetuneLog {
    // Indexed [epoch][gradient step].
    std::vector<std::vector<double>> sr;
    std::vector<std::vector<double>> sd;
    std::vector<std::vector<double>> sd_l1;
    std::vector<std::vector<double>> sd_dir;
    std::vector<double> lr;

    double mean_sd(std::size_t epoch) const;
    double mean_sr(std::size_t epoch) const;
};

/// Images the losses compare against.
struct FinetuneTargets {
    NdArray style;          // I_s
    NdArray style_content;  // I_s^c
    /// I_c^c, aligned with the store's content latents.
    std::vector<NdArray> contents;
};

/// Fine-tunes `model` in place, starting from the base parameters the store
/// was computed with. Each epoch runs K_s style-reconstruction passes from the
/// style latent, then one disentanglement pass per content latent; every
/// reverse step takes its own Adam step on the loss of that step's
/// predicted x0. Gradients do not flow through earlier chain steps.
FinetuneLog finetune(TrainableDenoiser& model, const LatentStore& store, const FinetuneTargets& targets,
                     const FinetuneConfig& cfg, const Projector& proj, const NoiseSchedule& sched,
                     const std::function<void(const std::string&)>& progress = {});

/// Style transfer of style-removed contents (a `{3, H, W}` image or a batch).
/// Deterministic path: invert with `base` along make_plan(S_for, T_trans),
/// then reverse with `tuned` along make_plan(S_rev, T_trans). With
/// `stochastic_seed`, the latent is instead a fresh forward-noised sample of
/// the content. Output clamped to [-1, 1].
NdArray stylize(const NdArray& content, const NoisePredictor& base, const NoisePredictor& tuned,
                const FinetuneConfig& cfg, const NoiseSchedule& sched,
                std::optional<std::uint64_t> stochastic_seed = std::nullopt);

}  // namespace styldiff
