// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/finetune.hpp"

#include <cstdio>
#include <numeric>

#include "styldiff/container.hpp"
#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"

namespace styldiff {
namespace {

constexpr char kStoreMagic[] = "SDLS";

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

NdArray as_batch(const NdArray& img) {
    if (img.rank() != 3 || img.extent(0) != 3) throw ShapeError("expected a {3, H, W} image, got " + to_string(img.shape()));
    return img.reshape({1, 3, img.extent(1), img.extent(2)});
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("finetune log: empty epoch");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void FinetuneConfig::validate(int total_steps) const {
    if (T_trans < 1 || T_trans > total_steps) throw ConfigError("finetune: T_trans must lie in [1, T]");
    if (S_for < 2 || S_rev < 2) throw ConfigError("finetune: S_for and S_rev must be >= 2");
    if (epochs < 0 || K_s < 0) throw ConfigError("finetune: epochs and K_s must be non-negative");
    if (n_contents < 1) throw ConfigError("finetune: need at least one content image");
    if (!(base_lr >= 0.0) || !(lr_growth >= 0.0)) throw ConfigError("finetune: learning rates must be non-negative");
    weights.validate();
}

FinetuneConfig FinetuneConfig::large_scale() {
    FinetuneConfig c;
    c.n_contents = 50;
    c.base_lr = 4e-6;
    return c;
}

void LatentStore::require_provenance(const TimestepPlan& expected_plan, std::uint32_t expected_checksum) const {
    if (denoiser_checksum != expected_checksum) {
        throw ProvenanceError("latent store was computed with denoiser " + hex32(denoiser_checksum) +
                              ", current denoiser is " + hex32(expected_checksum));
    }
    if (plan != expected_plan) {
        throw ProvenanceError("latent store plan (S=" + std::to_string(plan.size()) + ", T_return=" +
                              std::to_string(plan.return_step()) + ") differs from the requested plan (S=" +
                              std::to_string(expected_plan.size()) + ", T_return=" +
                              std::to_string(expected_plan.return_step()) + ")");
    }
}

void LatentStore::save(const std::filesystem::path& path) const {
    if (content_ids.size() != content_latents.size()) throw ShapeError("latent store: ids and latents differ in count");
    ContainerWriter out(kStoreMagic, kFormatVersion);
    out.put_u32(static_cast<std::uint32_t>(plan.size()));
    for (int t : plan.steps) out.put_u32(static_cast<std::uint32_t>(t));
    out.put_u32(denoiser_checksum);
    out.put_string(style_id);
    out.put_array("style", style_latent);
    out.put_u32(static_cast<std::uint32_t>(content_latents.size()));
    for (std::size_t i = 0; i < content_latents.size(); ++i) out.put_array(content_ids[i], content_latents[i]);
    out.write(path);
}

LatentStore LatentStore::load(const std::filesystem::path& path) {
    ContainerReader in = ContainerReader::open(path, kStoreMagic, kFormatVersion);
    LatentStore s;
    const std::uint32_t n_steps = in.get_u32();
    if (n_steps > 100000) throw FormatError("latent store: implausible plan length");
    for (std::uint32_t i = 0; i < n_steps; ++i) s.plan.steps.push_back(static_cast<int>(in.get_u32()));
    s.denoiser_checksum = in.get_u32();
    s.style_id = in.get_string();
    s.style_latent = in.get_array().second;
    const std::uint32_t n = in.get_u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        auto [id, latent] = in.get_array();
        s.content_ids.push_back(std::move(id));
        s.content_latents.push_back(std::move(latent));
    }
    if (!in.at_end()) throw FormatError("latent store: trailing bytes");
    return s;
}

LatentStore precompute_latents(std::span<const NdArray> contents, std::span<const std::string> content_ids,
                               const NdArray& style_content, const std::string& style_id, const FinetuneConfig& cfg,
                               const TrainableDenoiser& base, const NoiseSchedule& sched) {
    cfg.validate(sched.steps());
    if (contents.size() != content_ids.size()) throw ShapeError("precompute_latents: ids and images differ in count");
    LatentStore store;
    store.plan = make_plan(cfg.S_for, cfg.T_trans, sched.steps());
    store.denoiser_checksum = param_checksum(base.params());
    store.style_id = style_id;
    // Latents are rounded to 32 bits, the precision they are stored at, so a
    // reloaded store matches the in-memory one exactly.
    auto invert_one = [&](const NdArray& img) {
        NdArray latent = invert(img, store.plan, base, sched);
        round_to_f32(latent);
        return latent;
    };
    store.style_latent = invert_one(style_content);
    for (std::size_t i = 0; i < contents.size(); ++i) {
        store.content_ids.push_back(content_ids[i]);
        store.content_latents.push_back(invert_one(contents[i]));
    }
    return store;
}

double FinetuneLog::mean_sd(std::size_t epoch) const { return mean_of(sd.at(epoch)); }
double FinetuneLog::mean_sr(std::size_t epoch) const { return mean_of(sr.at(epoch)); }

FinetuneLog finetune(TrainableDenoiser& model, const LatentStore& store, const FinetuneTargets& targets,
                     const FinetuneConfig& cfg, const Projector& proj, const NoiseSchedule& sched,
                     const std::function<void(const std::string&)>& progress) {
    cfg.validate(sched.steps());
    store.require_provenance(store.plan, param_checksum(model.params()));
    if (store.plan.return_step() != cfg.T_trans) {
        throw ProvenanceError("latent store return step " + std::to_string(store.plan.return_step()) +
                              " differs from T_trans " + std::to_string(cfg.T_trans));
    }
    if (targets.contents.size() != store.content_latents.size()) {
        throw ShapeError("finetune: " + std::to_string(targets.contents.size()) + " content targets for " +
                         std::to_string(store.content_latents.size()) + " latents");
    }
    const TimestepPlan plan = make_plan(cfg.S_rev, cfg.T_trans, sched.steps());
    const NdArray style = as_batch(targets.style);
    const NdArray d_s = style_direction(proj, targets.style, targets.style_content);
    std::vector<NdArray> content_embeddings;
    for (const auto& c : targets.contents) content_embeddings.push_back(proj.embed(c));

    FinetuneLog log;
    AdamState adam = make_adam_state(model.params());

    // One pass down the reverse plan from `latent`; `step_loss` maps the
    // predicted x0 to the loss of that step.
    auto reverse_pass = [&](const NdArray& latent, double lr, const std::function<Var(Tape&, const Var&)>& step_loss,
                            const std::string& where) {
        NdArray x = as_batch(latent);
        for (std::size_t s = plan.size() - 1; s >= 1; --s) {
            const int t = plan.steps[s];
            Tape tape;
            const BoundParams bound(tape, model.params());
            const Var xv = tape.constant(x);
            const int ts[] = {t};
            try {
                const Var eps = model.forward(bound, xv, ts);
                const Var f = predict_x0(xv, t, eps, sched);
                const Var loss = step_loss(tape, f);
                const ParamSet grads = grad(loss, bound);
                x = ddim_reverse_step(x, t, plan.steps[s - 1], eps.value(), sched);
                adam_step(model.params(), grads, adam, lr);
            } catch (const NonFiniteError& e) {
                throw NonFiniteError(where + ", reverse step t=" + std::to_string(t) + ": " + e.what());
            }
        }
    };

    for (int k = 0; k < cfg.epochs; ++k) {
        const double lr = cfg.lr_at(k);
        log.lr.push_back(lr);
        auto& sr = log.sr.emplace_back();
        auto& sd = log.sd.emplace_back();
        auto& sd_l1 = log.sd_l1.emplace_back();
        auto& sd_dir = log.sd_dir.emplace_back();
        const std::string epoch = "epoch " + std::to_string(k);

        if (cfg.sr_substep) {
            for (int i = 0; i < cfg.K_s; ++i) {
                reverse_pass(store.style_latent, lr,
                             [&](Tape& tape, const Var& f) {
                                 const Var loss = loss_sr(f, tape.constant(style));
                                 sr.push_back(loss.value().item());
                                 return loss;
                             },
                             epoch + ", style reconstruction " + std::to_string(i));
            }
        }
        for (std::size_t i = 0; i < store.content_latents.size(); ++i) {
            reverse_pass(store.content_latents[i], lr,
                         [&](Tape& tape, const Var& f) {
                             const Var e_cs = reshape(proj.embed(f), {Projector::kEmbeddingSize});
                             const Var d_cs = e_cs - tape.constant(content_embeddings[i]);
                             const SdLoss loss = combine_sd(d_cs, tape.constant(d_s), cfg.weights);
                             sd.push_back(loss.total.value().item());
                             sd_l1.push_back(loss.l1.value().item());
                             sd_dir.push_back(loss.dir.value().item());
                             return loss.total;
                         },
                         epoch + ", content " + store.content_ids[i]);
        }
        if (progress) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "epoch %d lr %.3g mean L_SR %.5f mean L_SD %.5f", k, lr,
                          sr.empty() ? 0.0 : mean_of(sr), mean_of(sd));
            progress(buf);
        }
    }
    return log;
}

NdArray stylize(const NdArray& content, const NoisePredictor& base, const NoisePredictor& tuned,
                const FinetuneConfig& cfg, const NoiseSchedule& sched, std::optional<std::uint64_t> stochastic_seed) {
    cfg.validate(sched.steps());
    const TimestepPlan reverse = make_plan(cfg.S_rev, cfg.T_trans, sched.steps());
    NdArray out;
    if (stochastic_seed) {
        out = generate(content, reverse, tuned, sched, false, StochasticStart{content, *stochastic_seed}).final;
    } else {
        const TimestepPlan forward = make_plan(cfg.S_for, cfg.T_trans, sched.steps());
        out = generate(invert(content, forward, base, sched), reverse, tuned, sched).final;
    }
    return clamp(out, -1.0, 1.0);
}

}  // namespace styldiff
