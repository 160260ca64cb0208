// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "acceptance.hpp"
#include "styldiff/error.hpp"
#include "styldiff/image.hpp"
#include "styldiff/metrics.hpp"
#include "styldiff/rng.hpp"
#include "styldiff/runtime.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff::cli {
namespace {

constexpr char kModelFile[] = "model.sdfz";
constexpr char kStateFile[] = "pretrain_state.sdts";

Precision precision_of(const RunConfig& c, std::string_view key) {
    const std::string& v = c.get(key);
    if (v == "f32") return Precision::f32;
    if (v == "f64") return Precision::f64;
    throw ConfigError("config: " + std::string(key) + " must be f32 or f64, got '" + v + "'");
}

std::ofstream open_out(const Path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

UNetDenoiser load_model(const RunConfig& c, const std::string& key) {
    return UNetDenoiser::load(c.get(key), c.denoiser());
}

}  // namespace

std::vector<Path> list_pngs(const Path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<Path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void cmd_gen_data(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const auto n = static_cast<int>(c.get_int("data.n"));
    const auto size = static_cast<int>(c.get_int("data.size"));
    const auto per_kind = static_cast<int>(c.get_int("data.styles_per_kind"));
    if (n < 1) throw ConfigError("gen-data: data.n must be >= 1");
    if (per_kind < 0) throw ConfigError("gen-data: data.styles_per_kind must be >= 0");
    const std::uint64_t seed = c.get_seed("data.seed");
    std::filesystem::create_directories(ctx.out / "contents");
    std::filesystem::create_directories(ctx.out / "styles");
    c.write_resolved(ctx.out);

    std::vector<ManifestEntry> entries;
    char id[64];
    for (int i = 0; i < n; ++i) {
        std::snprintf(id, sizeof id, "c%04d", i);
        entries.push_back({id, content_seed(seed, i), "content", "size=" + std::to_string(size)});
    }
    // Styled images get their own content sources so that no training photo
    // appears in a style.
    const std::uint64_t style_seed = derive_seed(seed, 0x5354594c45ULL);
    int k = 0;
    for (StyleKind kind : kAllStyleKinds) {
        for (int j = 0; j < per_kind; ++j, ++k) {
            const std::string kind_name(to_string(kind));
            std::snprintf(id, sizeof id, "sc_%s_%d", kind_name.c_str(), j);
            const std::string source = id;
            entries.push_back({source, content_seed(style_seed, k), "content", "size=" + std::to_string(size)});
            const StyleSpec spec = random_style(kind, derive_seed(style_seed, 1000 + static_cast<std::uint64_t>(k)));
            std::snprintf(id, sizeof id, "s_%s_%d", kind_name.c_str(), j);
            entries.push_back({id, spec.seed, kind_name, "content=" + source + ";" + format_style_params(spec)});
        }
    }
    std::vector<NdArray> images(entries.size());
    parallel_for(entries.size(), ctx.threads, [&](std::size_t i) { images[i] = render_entry(entries[i], entries); });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const bool photo = entries[i].id[0] == 'c';
        write_png(ctx.out / (photo ? "contents" : "styles") / (entries[i].id + ".png"), images[i]);
    }
    write_manifest(ctx.out / "manifest.tsv", entries);
    ctx.say("wrote " + std::to_string(n) + " contents and " + std::to_string(k) + " style images to " + ctx.out.string());
}

void cmd_pretrain(const Context& ctx, const std::optional<Path>& resume_dir) {
    const RunConfig& c = ctx.config;
    const NoiseSchedule sched = c.schedule();
    PretrainOptions options = c.pretrain();
    std::vector<NdArray> data;
    for (const Path& p : list_pngs(Path(c.get("paths.data")) / "contents")) data.push_back(read_png(p));
    if (data.empty()) throw Error("pretrain: no images in " + (Path(c.get("paths.data")) / "contents").string());

    std::optional<TrainingState> state;
    UNetDenoiser model = resume_dir ? UNetDenoiser::load(*resume_dir / kModelFile, c.denoiser()) : UNetDenoiser(c.denoiser());
    if (resume_dir) {
        state = TrainingState::load(*resume_dir / kStateFile, model.params());
        options.steps = std::max<int>(0, options.steps - static_cast<int>(state->steps_done));
        ctx.say("resuming at step " + std::to_string(state->steps_done));
    }
    std::filesystem::create_directories(ctx.out);
    c.write_resolved(ctx.out);
    const std::int64_t first_step = state ? state->steps_done : 0;
    options.on_step = [&](int step, double loss) {
        if (step % 1000 == 0) ctx.say("step " + std::to_string(step) + " loss " + num(loss));
    };
    PrecisionScope precision(precision_of(c, "pretrain.precision"));
    const PretrainResult result = pretrain(model, data, sched, options, std::move(state));

    model.save(ctx.out / kModelFile);
    result.state.save(ctx.out / kStateFile, model.params());
    // A resumed run appends to the loss curve it continues.
    const Path curve = ctx.out / "pretrain_loss.tsv";
    std::ofstream f;
    if (resume_dir && std::filesystem::exists(*resume_dir / "pretrain_loss.tsv")) {
        if (std::filesystem::absolute(*resume_dir / "pretrain_loss.tsv") != std::filesystem::absolute(curve)) {
            std::filesystem::copy_file(*resume_dir / "pretrain_loss.tsv", curve,
                                       std::filesystem::copy_options::overwrite_existing);
        }
        f.open(curve, std::ios::binary | std::ios::app);
    } else {
        f.open(curve, std::ios::binary);
        f << "step\tloss\n";
    }
    for (std::size_t i = 0; i < result.losses.size(); ++i) {
        f << first_step + static_cast<std::int64_t>(i) + 1 << '\t' << num(result.losses[i]) << '\n';
    }
    ctx.say("saved " + (ctx.out / kModelFile).string());
}

std::vector<Path> cmd_remove_style(const Context& ctx, const std::vector<Path>& inputs, RemovalPreset preset) {
    const RunConfig& c = ctx.config;
    if (inputs.empty()) throw Error("remove-style: no input images");
    const NoiseSchedule sched = c.schedule();
    const UNetDenoiser model = load_model(c, "paths.model");
    RemovalConfig base = c.removal();
    if (preset == RemovalPreset::artistic) base.T_remov = RemovalConfig::artistic().T_remov;
    if (preset == RemovalPreset::photo) base.T_remov = RemovalConfig::photo().T_remov;
    std::vector<int> returns;
    if (preset == RemovalPreset::sweep) returns.assign(std::begin(kSweepReturnSteps), std::end(kSweepReturnSteps));
    else returns.push_back(base.T_remov);

    std::filesystem::create_directories(ctx.out);
    c.write_resolved(ctx.out);
    struct Job {
        Path input, output;
        int T_remov;
    };
    std::vector<Job> jobs;
    for (const Path& in : inputs) {
        for (int T : returns) {
            const std::string suffix = preset == RemovalPreset::sweep ? "_T" + std::to_string(T) : "_content";
            jobs.push_back({in, ctx.out / (in.stem().string() + suffix + ".png"), T});
        }
    }
    parallel_for(jobs.size(), ctx.threads, [&](std::size_t i) {
        RemovalConfig cfg = base;
        cfg.T_remov = jobs[i].T_remov;
        PrecisionScope precision(Precision::f32);
        write_png(jobs[i].output, remove_style(read_png(jobs[i].input), cfg, model, sched));
    });
    std::vector<Path> out;
    for (const auto& j : jobs) out.push_back(j.output);
    ctx.say("wrote " + std::to_string(out.size()) + " content images");
    return out;
}

void cmd_finetune(const Context& ctx, const FinetuneArgs& args) {
    const RunConfig& c = ctx.config;
    const NoiseSchedule sched = c.schedule();
    const FinetuneConfig cfg = c.finetune();
    cfg.validate(sched.steps());
    const UNetDenoiser base = load_model(c, "paths.model");
    const Projector proj = c.projector();
    std::filesystem::create_directories(ctx.out);
    c.write_resolved(ctx.out);
    PrecisionScope precision(precision_of(c, "finetune.precision"));

    const NdArray style = read_png(args.style);
    const NdArray style_content = remove_style(style, c.removal(), base, sched);
    write_png(ctx.out / "style_content.png", style_content);

    const Path content_dir = args.contents ? *args.contents : Path(c.get("paths.data")) / "contents";
    std::vector<Path> files = list_pngs(content_dir);
    if (files.size() < static_cast<std::size_t>(cfg.n_contents)) {
        throw Error("finetune: need " + std::to_string(cfg.n_contents) + " contents, found " +
                    std::to_string(files.size()) + " in " + content_dir.string());
    }
    files.resize(static_cast<std::size_t>(cfg.n_contents));
    RemovalConfig photo = c.removal();
    photo.skip_diffusion = true;
    FinetuneTargets targets{style, style_content, {}};
    std::vector<std::string> ids;
    for (const Path& p : files) {
        targets.contents.push_back(remove_style(read_png(p), photo, base, sched));
        ids.push_back(p.stem().string());
    }

    const Path store_path = c.get("paths.latents").empty() ? ctx.out / "latents.sdls" : Path(c.get("paths.latents"));
    const TimestepPlan plan = make_plan(cfg.S_for, cfg.T_trans, sched.steps());
    const std::string style_id = args.style.stem().string();
    LatentStore store;
    if (std::filesystem::exists(store_path)) {
        store = LatentStore::load(store_path);
        store.require_provenance(plan, param_checksum(base.params()));
        if (store.content_ids != ids) {
            throw ProvenanceError("latent store " + store_path.string() + " holds different contents");
        }
        if (store.style_id != style_id) {
            const LatentStore fresh = precompute_latents({}, {}, style_content, style_id, cfg, base, sched);
            store.style_id = style_id;
            store.style_latent = fresh.style_latent;
            ctx.say("reusing content latents; recomputed the style latent");
        } else {
            ctx.say("reusing latent store " + store_path.string());
        }
    } else {
        store = precompute_latents(targets.contents, ids, style_content, style_id, cfg, base, sched);
    }
    store.save(store_path);

    UNetDenoiser tuned = base;
    const FinetuneLog log = finetune(tuned, store, targets, cfg, proj, sched, ctx.log);
    tuned.save(ctx.out / "tuned.sdfz");

    std::ofstream sr = open_out(ctx.out / "finetune_sr.tsv");
    sr << "epoch\tstep\tloss_sr\n";
    for (std::size_t k = 0; k < log.sr.size(); ++k) {
        for (std::size_t i = 0; i < log.sr[k].size(); ++i) sr << k << '\t' << i << '\t' << num(log.sr[k][i]) << '\n';
    }
    std::ofstream sd = open_out(ctx.out / "finetune_sd.tsv");
    sd << "epoch\tstep\tloss_sd\tloss_l1\tloss_dir\n";
    for (std::size_t k = 0; k < log.sd.size(); ++k) {
        for (std::size_t i = 0; i < log.sd[k].size(); ++i) {
            sd << k << '\t' << i << '\t' << num(log.sd[k][i]) << '\t' << num(log.sd_l1[k][i]) << '\t'
               << num(log.sd_dir[k][i]) << '\n';
        }
    }
    std::ofstream meta = open_out(ctx.out / "finetune_meta.txt");
    meta << "lr_rule = base_lr * (1 + lr_growth * epoch), epoch from 0\n";
    for (std::size_t k = 0; k < log.lr.size(); ++k) meta << "lr.epoch" << k << " = " << num(log.lr[k]) << '\n';
    meta << "base_checksum = " << store.denoiser_checksum << '\n';
    meta << "tuned_checksum = " << param_checksum(tuned.params()) << '\n';
    ctx.say("saved " + (ctx.out / "tuned.sdfz").string());
}

std::vector<Path> cmd_stylize(const Context& ctx, const StylizeArgs& args) {
    const RunConfig& c = ctx.config;
    if (args.contents.empty()) throw Error("stylize: no content images");
    if (args.diverse < 0) throw Error("stylize: --diverse must be >= 0");
    const NoiseSchedule sched = c.schedule();
    const UNetDenoiser base = load_model(c, "paths.model");
    const UNetDenoiser tuned = load_model(c, "paths.tuned");
    FinetuneConfig cfg = c.finetune();
    RemovalConfig removal = c.removal();
    removal.skip_diffusion = !args.styled_input;
    const std::vector<int> returns = args.t_trans.empty() ? std::vector<int>{cfg.T_trans} : args.t_trans;
    const std::uint64_t seed = c.get_seed("finetune.seed");
    std::filesystem::create_directories(ctx.out);
    c.write_resolved(ctx.out);

    struct Job {
        std::size_t content;
        int T;
        int variant;  // -1: deterministic
        Path output;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < args.contents.size(); ++i) {
        const std::string stem = args.contents[i].stem().string();
        for (int T : returns) {
            const std::string tag = args.t_trans.empty() ? "" : "_T" + std::to_string(T);
            if (args.diverse == 0) jobs.push_back({i, T, -1, ctx.out / (stem + tag + "_stylized.png")});
            for (int v = 0; v < args.diverse; ++v) {
                jobs.push_back({i, T, v, ctx.out / (stem + tag + "_div" + std::to_string(v) + ".png")});
            }
        }
    }
    std::vector<NdArray> contents(args.contents.size());
    parallel_for(contents.size(), ctx.threads, [&](std::size_t i) {
        PrecisionScope precision(Precision::f32);
        contents[i] = remove_style(read_png(args.contents[i]), removal, base, sched);
    });
    parallel_for(jobs.size(), ctx.threads, [&](std::size_t i) {
        const Job& j = jobs[i];
        FinetuneConfig jc = cfg;
        jc.T_trans = j.T;
        std::optional<std::uint64_t> stochastic;
        if (j.variant >= 0) stochastic = derive_seed(seed, static_cast<std::uint64_t>(j.variant));
        PrecisionScope precision(Precision::f32);
        write_png(j.output, stylize(contents[j.content], base, tuned, jc, sched, stochastic));
    });
    std::vector<Path> out;
    for (const auto& j : jobs) out.push_back(j.output);
    ctx.say("wrote " + std::to_string(out.size()) + " stylized images");
    return out;
}

std::string cmd_evaluate(const Context& ctx, const Path& pairs) {
    std::ifstream f(pairs, std::ios::binary);
    if (!f) throw Error("cannot read " + pairs.string());
    const Projector proj = ctx.config.projector();
    const Path root = pairs.parent_path();
    auto resolve = [&](const std::string& p) {
        const Path path(p);
        const Path full = path.is_absolute() ? path : root / path;
        if (!std::filesystem::exists(full)) throw Error("evaluate: missing file " + full.string());
        return full;
    };
    std::vector<MetricRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() != 5) {
            throw FormatError(pairs.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields");
        }
        const NdArray content = read_png(resolve(fields[2]));
        const NdArray style = read_png(resolve(fields[3]));
        const NdArray output = read_png(resolve(fields[4]));
        rows.push_back({"ssim_content", fields[0], fields[1], ssim(output, content)});
        rows.push_back({"style_score", fields[0], fields[1], style_score(proj, output, style)});
        rows.push_back({"style_gram", fields[0], fields[1], style_distance_gram(proj, output, style)});
    }
    std::filesystem::create_directories(ctx.out);
    write_report(ctx.out / "metrics.tsv", rows);
    return format_report(rows);
}

int cmd_verify(const Context& ctx, const VerifyArgs& args) {
    acceptance::Options options;
    options.only = args.only;
    options.work_dir = args.work_dir.empty() ? ctx.out / "verify" : args.work_dir;
    options.log = ctx.log;
    bool ok = true;
    for (const auto& outcome : acceptance::run(options)) {
        ok = ok && outcome.pass;
        std::printf("%s\n", acceptance::format_line(outcome).c_str());
        std::fflush(stdout);
    }
    return ok ? 0 : 1;
}

Path cmd_grid(const Context& ctx, const GridArgs& args) {
    if (args.inputs.empty()) throw Error("grid: no input images");
    if (!args.labels.empty() && args.labels.size() != args.inputs.size()) {
        throw Error("grid: " + std::to_string(args.labels.size()) + " labels for " + std::to_string(args.inputs.size()) +
                    " images");
    }
    std::vector<GridTile> tiles;
    for (std::size_t i = 0; i < args.inputs.size(); ++i) {
        tiles.push_back({read_png(args.inputs[i]), args.labels.empty() ? args.inputs[i].stem().string() : args.labels[i]});
    }
    const int cols = args.cols > 0 ? args.cols : static_cast<int>(args.inputs.size());
    const Path output = args.output.empty() ? ctx.out / "grid.png" : args.output;
    if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
    write_png(output, make_grid(tiles, args.rows, cols));
    return output;
}

}  // namespace styldiff::cli
