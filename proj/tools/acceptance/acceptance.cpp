// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>

#include "styldiff/denoiser.hpp"
#include "styldiff/diffusion.hpp"
#include "styldiff/disentangle.hpp"
#include "styldiff/error.hpp"
#include "styldiff/finetune.hpp"
#include "styldiff/image.hpp"
#include "styldiff/metrics.hpp"
#include "styldiff/ops.hpp"
#include "styldiff/removal.hpp"
#include "styldiff/rng.hpp"
#include "styldiff/schedule.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff::acceptance {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

// Desk-scale pipeline settings shared by criteria 7 to 10.
constexpr int kT = 1000;
constexpr int kImageSize = 32;
constexpr int kCorpusSize = 512;
constexpr int kPretrainSteps = 20000;
constexpr std::uint64_t kCorpusSeed = 1;
constexpr std::uint64_t kDenoiserSeed = 3;
constexpr std::uint64_t kPretrainSeed = 5;
constexpr std::uint64_t kFinetuneSeed = 11;
constexpr int kFinetuneContents = 16;
constexpr int kHeldOut = 8;
constexpr double kPretrainBudget = 15 * 60.0;
constexpr double kFinetuneBudget = 20 * 60.0;
// The one style the end-to-end criterion is run on, and the content its style
// image is painted over (outside the training corpus).
constexpr StyleKind kStyleKind = StyleKind::stripes;
constexpr std::uint64_t kStyleSeed = 7;
constexpr std::uint64_t kStyleSourceSeed = 999;

NoiseSchedule desk_schedule() { return NoiseSchedule::linear(kT, 1e-4, 0.02); }

DenoiserConfig desk_denoiser() {
    DenoiserConfig c;
    c.image_size = kImageSize;
    c.base_width = 8;
    c.levels = 2;
    c.time_embed_dim = 64;
    c.seed = kDenoiserSeed;
    return c;
}

// ---------------------------------------------------------------------------
// Criteria without a trained model

Outcome schedule_suite() {
    Outcome o{1, "schedule properties", true, {}, 0.0};
    const NoiseSchedule s = desk_schedule();
    for (int t = 1; t <= s.steps(); ++t) {
        if (!(s.alpha_bar(t) < s.alpha_bar(t - 1))) {
            o.pass = false;
            o.detail = "alpha_bar not strictly decreasing at t=" + std::to_string(t);
            return o;
        }
    }
    double worst_rel = 0.0;
    for (int t = 1; t <= s.steps(); ++t) {
        double prod = 1.0;
        for (int u = 1; u <= t; ++u) prod *= 1.0 - s.beta(u);
        worst_rel = std::max(worst_rel, std::abs(prod - s.alpha_bar(t)) / prod);
    }
    Rng rng(20260101);
    int bad_plans = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const int ret = static_cast<int>(rng.uniform_int(1, kT));
        const int count = static_cast<int>(rng.uniform_int(2, std::min(ret + 1, 200)));
        const TimestepPlan p = make_plan(count, ret, kT);
        bool ok = p.size() == static_cast<std::size_t>(count) && p.steps.front() == 0 && p.return_step() == ret;
        for (std::size_t i = 1; ok && i < p.size(); ++i) ok = p.steps[i] > p.steps[i - 1];
        if (!ok) ++bad_plans;
    }
    o.pass = worst_rel <= 1e-12 && bad_plans == 0;
    o.detail = "product recomputation rel err " + fmt("%.2e", worst_rel) + " (<= 1e-12), " +
               std::to_string(bad_plans) + "/1000 invalid plans";
    return o;
}

Outcome forward_moments() {
    Outcome o{2, "forward-process moments", true, {}, 0.0};
    const NoiseSchedule s = desk_schedule();
    Rng rng(424242);
    constexpr int kDraws = 10000;
    double worst_z = 0.0;
    for (int c = 0; c < 3; ++c) {
        const NdArray x0 = rng.normal_array({3, 2, 2});
        const int t = static_cast<int>(rng.uniform_int(1, kT));
        const double ab = s.alpha_bar(t);
        std::vector<double> sum(x0.size(), 0.0), sum_sq(x0.size(), 0.0);
        for (int d = 0; d < kDraws; ++d) {
            const NdArray xt = q_sample(x0, t, rng.normal_array(x0.shape()), s);
            for (std::size_t i = 0; i < xt.size(); ++i) {
                sum[i] += xt[i];
                sum_sq[i] += xt[i] * xt[i];
            }
        }
        const double var = 1.0 - ab;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            const double m = sum[i] / kDraws;
            const double v = (sum_sq[i] - kDraws * m * m) / (kDraws - 1);
            const double z_mean = std::abs(m - std::sqrt(ab) * x0[i]) / std::sqrt(var / kDraws);
            const double z_var = std::abs(v - var) / (var * std::sqrt(2.0 / (kDraws - 1)));
            worst_z = std::max({worst_z, z_mean, z_var});
        }
    }
    o.pass = worst_z <= 4.0;
    o.detail = "largest deviation " + fmt("%.2f", worst_z) + " standard errors (<= 4) over 3 cases x 12 coords";
    return o;
}

Outcome algebraic_inversion() {
    Outcome o{3, "predict_x0 inverts q_sample", true, {}, 0.0};
    const NoiseSchedule s = desk_schedule();
    Rng rng(31337);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const NdArray x0 = rng.normal_array({3, 8, 8});
        const NdArray eps = rng.normal_array(x0.shape());
        const int t = static_cast<int>(rng.uniform_int(1, kT));
        const NdArray back = predict_x0(q_sample(x0, t, eps, s), t, eps, s);
        worst = std::max(worst, max_abs(back - x0) / max_abs(x0));
    }
    o.pass = worst <= 1e-10;
    o.detail = "worst relative error " + fmt("%.2e", worst) + " (<= 1e-10) over 100 cases";
    return o;
}

Outcome oracle_round_trip() {
    Outcome o{4, "DDIM round trip under the Gaussian oracle", true, {}, 0.0};
    const NoiseSchedule s = desk_schedule();
    // Oracle fitted to the toy photo corpus: per-pixel mean and variance.
    const auto corpus = gen_content(kCorpusSeed, kCorpusSize, kImageSize);
    NdArray m(corpus[0].shape()), v(corpus[0].shape());
    for (const auto& x : corpus) m = m + x;
    m = (1.0 / kCorpusSize) * m;
    for (const auto& x : corpus) v = v + (x - m) * (x - m);
    v = (1.0 / kCorpusSize) * v;
    const LinearGaussianOracle oracle(m, v, s);
    const TimestepPlan plan = make_plan(40, 601, kT);
    Rng rng(6011);
    double worst = 0.0;
    for (int c = 0; c < 10; ++c) {
        NdArray x0 = rng.normal_array(m.shape());
        for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = m[i] + std::sqrt(v[i]) * x0[i];
        const NdArray rec = generate(invert(x0, plan, oracle, s), plan, oracle, s).final;
        worst = std::max(worst, l2_norm(rec - x0) / l2_norm(x0));
    }
    o.pass = worst <= 1e-3;
    o.detail = "worst relative L2 error " + fmt("%.3e", worst) + " (<= 1e-3) over 10 oracle samples, S=40/40, T=601";
    return o;
}

// Central-difference check of a scalar function along random directions.
struct GradCheck {
    double worst = 0.0;

    void along(const std::function<double(const NdArray&)>& f, const NdArray& x, const NdArray& analytic, Rng& rng,
               int directions, double h = 1e-6) {
        for (int d = 0; d < directions; ++d) {
            const NdArray dir = rng.normal_array(x.shape());
            const double numeric = (f(axpby(1.0, x, h, dir)) - f(axpby(1.0, x, -h, dir))) / (2.0 * h);
            const double exact = dot(analytic, dir);
            const double rel = std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-12});
            worst = std::max(worst, rel);
        }
    }
};

Outcome gradient_checks() {
    Outcome o{5, "analytic gradients match finite differences", true, {}, 0.0};
    PrecisionScope f64(Precision::f64);
    Rng rng(555);
    const Projector proj;
    std::vector<std::string> parts;
    bool ok = true;
    auto report = [&](const char* name, const GradCheck& g) {
        ok = ok && g.worst <= 1e-4;
        parts.push_back(std::string(name) + " " + fmt("%.1e", g.worst));
    };
    const Shape img{1, 3, 8, 8};
    auto rand_img = [&] { return rng.normal_array(img); };

    {  // L_SD in the stylized image
        const NdArray cc = rng.normal_array({3, 8, 8}), sc = rng.normal_array({3, 8, 8}),
                      st = rng.normal_array({3, 8, 8});
        const LossWeights w;
        auto f = [&](const NdArray& x) {
            Tape tape(Tape::Mode::inference);
            return loss_sd(proj, cc, tape.constant(x), sc, st, w).total.value().item();
        };
        const NdArray x = rand_img();
        Tape tape;
        const Var xv = tape.variable(x);
        tape.backward(loss_sd(proj, cc, xv, sc, st, w).total);
        GradCheck g;
        g.along(f, x, tape.grad(xv), rng, 4);
        report("L_SD", g);
    }
    {  // L_SR
        const NdArray target = rand_img();
        auto f = [&](const NdArray& x) {
            Tape tape(Tape::Mode::inference);
            return loss_sr(tape.constant(x), tape.constant(target)).value().item();
        };
        const NdArray x = rand_img();
        Tape tape;
        const Var xv = tape.variable(x);
        tape.backward(loss_sr(xv, tape.constant(target)));
        GradCheck g;
        g.along(f, x, tape.grad(xv), rng, 4);
        report("L_SR", g);
    }
    {  // Gram loss
        const NdArray target = rand_img();
        auto f = [&](const NdArray& x) { return gram_loss(proj, x, target); };
        const NdArray x = rand_img();
        Tape tape;
        const Var xv = tape.variable(x);
        tape.backward(gram_loss(proj, xv, tape.constant(target)));
        GradCheck g;
        g.along(f, x, tape.grad(xv), rng, 4);
        report("gram", g);
    }
    {  // Denoiser forward, through the weights and the input
        DenoiserConfig c;
        c.image_size = 16;
        c.base_width = 2;
        c.levels = 2;
        c.time_embed_dim = 8;
        c.seed = 9;
        UNetDenoiser net(c);
        // Move the zero-initialised layers off zero so every path carries gradient.
        for (std::size_t i = 0; i < net.params().size(); ++i) {
            NdArray& p = net.params().value(i);
            p = axpby(1.0, p, 0.1, rng.normal_array(p.shape()));
        }
        const NdArray x = rng.normal_array({2, 3, 16, 16});
        const NdArray r = rng.normal_array(x.shape());
        const std::vector<int> ts = {17, 503};
        auto loss_of = [&](const BoundParams& w, const Var& xv) { return sum(net.forward(w, xv, ts) * xv.tape().constant(r)); };

        Tape tape;
        const BoundParams bound(tape, net.params());
        const Var xv = tape.variable(x);
        const Var loss = loss_of(bound, xv);
        const ParamSet gw = grad(loss, bound);
        const NdArray gx = tape.grad(xv);

        GradCheck g;
        auto f_input = [&](const NdArray& xi) {
            Tape t(Tape::Mode::inference);
            return loss_of(BoundParams(t, net.params()), t.constant(xi)).value().item();
        };
        g.along(f_input, x, gx, rng, 3);
        for (std::size_t i = 0; i < net.params().size(); i += 3) {
            const NdArray base = net.params().value(i);
            auto f_weight = [&](const NdArray& wi) {
                ParamSet ps = net.params();
                ps.value(i) = wi;
                Tape t(Tape::Mode::inference);
                return loss_of(BoundParams(t, ps), t.constant(x)).value().item();
            };
            g.along(f_weight, base, gw.value(i), rng, 1);
        }
        report("denoiser", g);
    }
    o.pass = ok;
    o.detail = "worst relative error (<= 1e-4):";
    for (const auto& p : parts) o.detail += " " + p;
    return o;
}

Outcome collapse_experiment() {
    Outcome o{6, "direction loss prevents collapse", true, {}, 0.0};
    CollapseOptions opt;
    opt.seed = 2026;
    const CollapseResult r = run_collapse_experiment(opt);
    o.pass = r.min_combined >= 0.99 && r.mean_combined > r.mean_l1;
    o.detail = "combined min cos " + fmt("%.4f", r.min_combined) + " (>= 0.99), mean " +
               fmt("%.4f", r.mean_combined) + " vs L1-only mean " + fmt("%.4f", r.mean_l1) + " over " +
               std::to_string(opt.runs) + " runs";
    return o;
}

// ---------------------------------------------------------------------------
// Criteria on the desk-scale pipeline

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct Tuned {
    std::unique_ptr<UNetDenoiser> model;
    FinetuneLog log;
    double seconds = 0.0;
};

class Pipeline {
public:
    Pipeline(std::filesystem::path work, std::function<void(const std::string&)> log)
        : work_(std::move(work)), log_(std::move(log)), sched_(desk_schedule()) {
        std::filesystem::create_directories(work_);
    }

    const NoiseSchedule& sched() const { return sched_; }
    const Projector& proj() const { return proj_; }
    const std::filesystem::path& work() const { return work_; }

    const UNetDenoiser& base() {
        if (!base_) train_base();
        return *base_;
    }
    double pretrain_seconds() {
        base();
        return pretrain_seconds_;
    }
    double final_pretrain_loss() {
        base();
        return final_loss_;
    }

    FinetuneConfig finetune_config(bool sr_substep) const {
        FinetuneConfig cfg;
        cfg.n_contents = kFinetuneContents;
        cfg.sr_substep = sr_substep;
        cfg.seed = kFinetuneSeed;
        return cfg;
    }

    const NdArray& style() {
        prepare_style();
        return style_;
    }
    const NdArray& style_content() {
        prepare_style();
        return style_content_;
    }

    const Tuned& tuned(bool sr_substep) {
        auto& slot = sr_substep ? with_sr_ : without_sr_;
        if (!slot.model) slot = run_finetune(sr_substep);
        return slot;
    }

    /// Held-out photographs and their luma (their style-removed form).
    const std::vector<NdArray>& held_out() {
        prepare_held_out();
        return held_out_;
    }
    const std::vector<NdArray>& held_out_content() {
        prepare_held_out();
        return held_out_content_;
    }

    double mean_direction_cos(const NoisePredictor& tuned_model) {
        const FinetuneConfig cfg = finetune_config(true);
        const NdArray d_s = style_direction(proj_, style(), style_content());
        std::vector<double> cos;
        for (const auto& cc : held_out_content()) {
            const NdArray out = stylize(cc, base(), tuned_model, cfg, sched_);
            cos.push_back(cosine(style_direction(proj_, out, cc), d_s));
        }
        return mean_of(cos);
    }

    /// L_SR of the deterministic reconstruction of the style latent.
    double reconstruction_loss(const NoisePredictor& model) {
        const FinetuneConfig cfg = finetune_config(true);
        const NdArray latent = store().style_latent;
        const NdArray rec = generate(latent, make_plan(cfg.S_rev, cfg.T_trans, kT), model, sched_).final;
        Tape tape(Tape::Mode::inference);
        return loss_sr(tape.constant(rec), tape.constant(style())).value().item();
    }

private:
    void say(const std::string& line) const {
        if (log_) log_(line);
    }

    void train_base() {
        PrecisionScope f32(Precision::f32);
        say("pretraining the desk-scale denoiser (" + std::to_string(kPretrainSteps) + " steps)");
        const auto corpus = gen_content(kCorpusSeed, kCorpusSize, kImageSize);
        auto model = std::make_unique<UNetDenoiser>(desk_denoiser());
        PretrainOptions opt;
        opt.steps = kPretrainSteps;
        opt.seed = kPretrainSeed;
        double window = 0.0;
        opt.on_step = [&](int step, double loss) {
            window += loss;
            if (step % 1000 == 0) {
                final_loss_ = window / 1000.0;
                say("  step " + std::to_string(step) + " mean loss " + fmt("%.4f", final_loss_));
                window = 0.0;
            }
        };
        const auto start = Clock::now();
        pretrain(*model, corpus, sched_, opt);
        pretrain_seconds_ = seconds_since(start);
        model->save(work_ / "base.sdfz");
        base_ = std::move(model);
    }

    void prepare_style() {
        if (!style_.empty()) return;
        PrecisionScope f32(Precision::f32);
        const StyleSpec spec = random_style(kStyleKind, kStyleSeed);
        style_ = apply_style(gen_content_image(kStyleSourceSeed, kImageSize), spec);
        style_content_ = remove_style(style_, RemovalConfig::artistic(), base(), sched_);
        write_png(work_ / "style.png", style_);
        write_png(work_ / "style_content.png", style_content_);
        say("style " + std::string(to_string(spec.kind)) + " " + format_style_params(spec));
    }

    void prepare_held_out() {
        if (!held_out_.empty()) return;
        for (int i = 0; i < kHeldOut; ++i) {
            held_out_.push_back(gen_content_image(content_seed(kCorpusSeed, kCorpusSize + i), kImageSize));
            held_out_content_.push_back(luma(held_out_.back()));
        }
    }

    const LatentStore& store() {
        if (store_) return *store_;
        PrecisionScope f32(Precision::f32);
        const auto corpus = gen_content(kCorpusSeed, kFinetuneContents, kImageSize);
        for (int i = 0; i < kFinetuneContents; ++i) {
            contents_.push_back(luma(corpus[static_cast<std::size_t>(i)]));
            ids_.push_back("c" + std::to_string(i));
        }
        store_ = precompute_latents(contents_, ids_, style_content(), "style", finetune_config(true), base(), sched_);
        store_->save(work_ / "latents.sdls");
        return *store_;
    }

    // Timed from the style image: removal and the latent precompute count
    // towards the first run.
    Tuned run_finetune(bool sr_substep) {
        base();
        const auto start = Clock::now();
        const LatentStore& s = store();
        PrecisionScope f32(Precision::f32);
        say(std::string("fine-tuning ") + (sr_substep ? "with" : "without") + " the style-reconstruction substep");
        Tuned out;
        out.model = std::make_unique<UNetDenoiser>(base());
        const FinetuneTargets targets{style(), style_content(), contents_};
        out.log = finetune(*out.model, s, targets, finetune_config(sr_substep), proj_, sched_,
                           [this](const std::string& line) { say("  " + line); });
        out.seconds = seconds_since(start);
        out.model->save(work_ / (sr_substep ? "tuned.sdfz" : "tuned_no_sr.sdfz"));
        return out;
    }

    std::filesystem::path work_;
    std::function<void(const std::string&)> log_;
    NoiseSchedule sched_;
    Projector proj_;
    std::unique_ptr<UNetDenoiser> base_;
    double pretrain_seconds_ = 0.0;
    double final_loss_ = 0.0;
    NdArray style_, style_content_;
    std::vector<NdArray> held_out_, held_out_content_;
    std::vector<NdArray> contents_;
    std::vector<std::string> ids_;
    std::optional<LatentStore> store_;
    Tuned with_sr_, without_sr_;
};

Outcome removal_trend(Pipeline& p) {
    Outcome o{7, "style removal strengthens with T_remov", true, {}, 0.0};
    const UNetDenoiser& base = p.base();
    PrecisionScope f32(Precision::f32);
    // Two style images per kind, painted over held-out photographs.
    std::vector<NdArray> styled;
    for (StyleKind kind : kAllStyleKinds) {
        for (int j = 0; j < 2; ++j) {
            const auto seed = derive_seed(77, static_cast<std::uint64_t>(styled.size()));
            styled.push_back(apply_style(gen_content_image(derive_seed(seed, 1), kImageSize), random_style(kind, seed)));
        }
    }
    const NdArray batch = stack(styled);
    const NdArray emb = p.proj().embed(batch);
    const std::size_t dims = Projector::kEmbeddingSize;
    std::vector<double> dist;
    for (int t_remov : {201, 401, 601, 801}) {
        RemovalConfig cfg;
        cfg.T_remov = t_remov;
        const NdArray removed = remove_style(batch, cfg, base, p.sched());
        const NdArray e = p.proj().embed(removed);
        double total = 0.0;
        for (std::size_t i = 0; i < styled.size(); ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < dims; ++k) {
                const double d = e[i * dims + k] - emb[i * dims + k];
                sq += d * d;
            }
            total += std::sqrt(sq);
        }
        dist.push_back(total / static_cast<double>(styled.size()));
    }
    o.pass = std::is_sorted(dist.begin(), dist.end());
    o.detail = "mean ||E(I^c) - E(I)|| over " + std::to_string(styled.size()) + " style images at T_remov 201/401/601/801:";
    for (double d : dist) o.detail += " " + fmt("%.4f", d);
    return o;
}

Outcome end_to_end(Pipeline& p) {
    Outcome o{8, "desk-scale pretrain and fine-tune", true, {}, 0.0};
    const double pretrain_s = p.pretrain_seconds();
    const Tuned& t = p.tuned(true);
    const double first = t.log.mean_sd(0);
    const double last = t.log.mean_sd(t.log.sd.size() - 1);
    const bool a = last <= 0.5 * first;

    PrecisionScope f32(Precision::f32);
    const double cos_before = p.mean_direction_cos(p.base());
    const double cos_after = p.mean_direction_cos(*t.model);
    const bool b = cos_after > cos_before;

    const FinetuneConfig cfg = p.finetune_config(true);
    std::vector<double> ssim_out, ssim_style;
    for (std::size_t i = 0; i < p.held_out().size(); ++i) {
        const NdArray out = stylize(p.held_out_content()[i], p.base(), *t.model, cfg, p.sched());
        if (i == 0) write_png(p.work() / "stylized_0.png", out);
        ssim_out.push_back(ssim(out, p.held_out()[i]));
        ssim_style.push_back(ssim(p.style(), p.held_out()[i]));
    }
    const bool c = mean_of(ssim_out) > mean_of(ssim_style);
    const bool timing = pretrain_s <= kPretrainBudget && t.seconds <= kFinetuneBudget;

    o.pass = a && b && c && timing;
    o.detail = "pretrain " + fmt("%.0f", pretrain_s) + " s (<= 900, final loss " + fmt("%.4f", p.final_pretrain_loss()) +
               "), fine-tune " + fmt("%.0f", t.seconds) + " s (<= 1200); (a) L_SD " + fmt("%.4f", first) + " -> " +
               fmt("%.4f", last) + (a ? " ok" : " FAIL") + "; (b) cos " + fmt("%.4f", cos_before) + " -> " +
               fmt("%.4f", cos_after) + (b ? " ok" : " FAIL") + "; (c) SSIM stylized " + fmt("%.4f", mean_of(ssim_out)) +
               " vs style " + fmt("%.4f", mean_of(ssim_style)) + (c ? " ok" : " FAIL");
    return o;
}

Outcome diversity(Pipeline& p) {
    Outcome o{9, "stochastic diversity and deterministic replay", true, {}, 0.0};
    const Tuned& t = p.tuned(true);
    PrecisionScope f32(Precision::f32);
    const FinetuneConfig cfg = p.finetune_config(true);
    const NdArray& content = p.held_out_content()[0];
    const NdArray s1 = stylize(content, p.base(), *t.model, cfg, p.sched(), derive_seed(kFinetuneSeed, 1));
    const NdArray s2 = stylize(content, p.base(), *t.model, cfg, p.sched(), derive_seed(kFinetuneSeed, 2));
    const NdArray d1 = stylize(content, p.base(), *t.model, cfg, p.sched());
    const NdArray d2 = stylize(content, p.base(), *t.model, cfg, p.sched());
    const double spread = l2_norm(s1 - s2);
    const bool same = bit_equal(d1, d2);
    o.pass = spread > 0.0 && same;
    o.detail = "L2 between two seeds " + fmt("%.4f", spread) + " (> 0); deterministic runs " +
               (same ? "bit-identical" : "DIFFER");
    return o;
}

Outcome sr_ablation(Pipeline& p) {
    Outcome o{10, "style-reconstruction substep ablation", true, {}, 0.0};
    const Tuned& with_sr = p.tuned(true);
    const Tuned& without_sr = p.tuned(false);
    PrecisionScope f32(Precision::f32);
    const double sr_with = p.reconstruction_loss(*with_sr.model);
    const double sr_without = p.reconstruction_loss(*without_sr.model);
    const double cos_with = p.mean_direction_cos(*with_sr.model);
    const double cos_without = p.mean_direction_cos(*without_sr.model);
    o.pass = sr_with < sr_without && cos_with >= cos_without;
    o.detail = "final L_SR " + fmt("%.4f", sr_with) + " with vs " + fmt("%.4f", sr_without) + " without; mean cos " +
               fmt("%.4f", cos_with) + " with vs " + fmt("%.4f", cos_without) + " without";
    return o;
}

// ---------------------------------------------------------------------------

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class Fn>
bool throws_as_format_error(Fn&& fn) {
    try {
        fn();
    } catch (const FormatError&) {
        return true;
    } catch (const std::exception&) {
        return false;
    }
    return false;
}

Outcome persistence(const std::filesystem::path& work) {
    Outcome o{11, "checkpoint and latent-store persistence", true, {}, 0.0};
    std::filesystem::create_directories(work);
    const NoiseSchedule sched = desk_schedule();
    PrecisionScope f32(Precision::f32);

    DenoiserConfig c = desk_denoiser();
    UNetDenoiser model(c);
    Rng rng(1111);
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        NdArray& v = model.params().value(i);
        v = axpby(1.0, v, 0.05, rng.normal_array(v.shape()));
        round_to_f32(v);
    }
    const auto model_path = work / "persist.sdfz";
    model.save(model_path);
    const UNetDenoiser loaded = UNetDenoiser::load(model_path, c);
    bool model_exact = loaded.params().aligned_with(model.params());
    for (std::size_t i = 0; model_exact && i < model.params().size(); ++i) {
        model_exact = bit_equal(loaded.params().value(i), model.params().value(i));
    }

    FinetuneConfig cfg;
    const auto contents = gen_content(kCorpusSeed, 2, kImageSize);
    std::vector<NdArray> cc = {luma(contents[0]), luma(contents[1])};
    const std::vector<std::string> ids = {"c0", "c1"};
    const NdArray style_c = luma(gen_content_image(kStyleSourceSeed, kImageSize));
    const LatentStore store = precompute_latents(cc, ids, style_c, "s", cfg, model, sched);
    const auto store_path = work / "persist.sdls";
    store.save(store_path);
    const LatentStore back = LatentStore::load(store_path);
    bool store_exact = back.plan == store.plan && back.denoiser_checksum == store.denoiser_checksum &&
                       back.content_ids == store.content_ids && back.style_id == store.style_id &&
                       bit_equal(back.style_latent, store.style_latent) &&
                       back.content_latents.size() == store.content_latents.size();
    for (std::size_t i = 0; store_exact && i < store.content_latents.size(); ++i) {
        store_exact = bit_equal(back.content_latents[i], store.content_latents[i]);
    }

    // Flip one payload bit in each file.
    bool crc_rejected = true;
    for (const auto& path : {model_path, store_path}) {
        auto bytes = read_bytes(path);
        bytes[bytes.size() / 2] ^= 0x10;
        const auto bad = work / ("corrupt_" + path.filename().string());
        write_bytes(bad, bytes);
        crc_rejected = crc_rejected && throws_as_format_error([&] {
                           if (path == model_path) {
                               UNetDenoiser::load(bad, c);
                           } else {
                               LatentStore::load(bad);
                           }
                       });
    }

    // A store computed under a different base model or plan is refused.
    bool provenance_rejected = false;
    UNetDenoiser other = model;
    other.params().value(0)[0] += 0.5;
    try {
        FinetuneLog unused = finetune(other, back, {style_c, style_c, cc}, cfg, Projector(), sched);
        (void)unused;
    } catch (const ProvenanceError&) {
        provenance_rejected = true;
    }
    try {
        back.require_provenance(make_plan(cfg.S_for, cfg.T_trans + 100, kT), back.denoiser_checksum);
        provenance_rejected = false;
    } catch (const ProvenanceError&) {
    }

    o.pass = model_exact && store_exact && crc_rejected && provenance_rejected;
    o.detail = std::string("checkpoint ") + (model_exact ? "bit-exact" : "DIFFERS") + ", latent store " +
               (store_exact ? "bit-exact" : "DIFFERS") + ", corrupted CRC " + (crc_rejected ? "rejected" : "ACCEPTED") +
               ", provenance mismatch " + (provenance_rejected ? "rejected" : "ACCEPTED");
    return o;
}

}  // namespace

std::vector<Outcome> run(const Options& options) {
    std::vector<int> ids = options.only;
    if (ids.empty()) {
        for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int id : ids) {
        if (id < 1 || id > kCriterionCount) throw ConfigError("no acceptance criterion " + std::to_string(id));
    }

    const std::filesystem::path work = options.work_dir.empty() ? std::filesystem::path("verify") : options.work_dir;
    Pipeline pipeline(work, options.log);
    std::vector<Outcome> out;
    for (int id : ids) {
        const auto start = Clock::now();
        Outcome o;
        try {
            switch (id) {
                case 1: o = schedule_suite(); break;
                case 2: o = forward_moments(); break;
                case 3: o = algebraic_inversion(); break;
                case 4: o = oracle_round_trip(); break;
                case 5: o = gradient_checks(); break;
                case 6: o = collapse_experiment(); break;
                case 7: o = removal_trend(pipeline); break;
                case 8: o = end_to_end(pipeline); break;
                case 9: o = diversity(pipeline); break;
                case 10: o = sr_ablation(pipeline); break;
                case 11: o = persistence(work / "persistence"); break;
            }
        } catch (const std::exception& e) {
            o = Outcome{id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), 0.0};
        }
        o.seconds = seconds_since(start);
        out.push_back(o);
        if (options.log) options.log(format_line(o));
    }
    return out;
}

std::string format_line(const Outcome& outcome) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f s", outcome.seconds);
    return std::string(outcome.pass ? "[PASS]" : "[FAIL]") + " criterion " + std::to_string(outcome.id) + ": " +
           outcome.title + " | " + outcome.detail + " (" + secs + ")";
}

}  // namespace styldiff::acceptance
