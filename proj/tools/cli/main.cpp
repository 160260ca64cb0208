// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "commands.hpp"
#include "styldiff/error.hpp"
#include "styldiff/runtime.hpp"

using namespace styldiff;
using namespace styldiff::cli;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t end = std::min(s.find(',', pos), s.size());
        if (end > pos) out.push_back(s.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split_commas(s)) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty()) throw ConfigError("expected a comma-separated list of integers, got '" + s + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"styldiff: diffusion style removal, disentanglement losses and fine-tuning on a toy image domain"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> overrides;
    bool quiet = false;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "global seed for every setting left at auto");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (default: STYLDIFF_THREADS, else 1)");
    app.add_option("--set", overrides, "override one config key, key=value (repeatable)");
    app.add_flag("-q,--quiet", quiet, "no progress output");

    auto* gen = app.add_subcommand("gen-data", "generate the toy photo and style corpus");

    auto* pre = app.add_subcommand("pretrain", "train the noise predictor on the photo corpus");
    std::string resume;
    pre->add_option("--resume", resume, "directory of an earlier run to continue")->check(CLI::ExistingDirectory);

    auto* rem = app.add_subcommand("remove-style", "extract content from style images");
    std::vector<std::string> rem_inputs;
    std::string preset = "config";
    bool photo_domain = false;
    rem->add_option("inputs", rem_inputs, "input PNGs")->required()->check(CLI::ExistingFile);
    rem->add_option("--preset", preset, "config, artistic (601), photo (401) or sweep (201..801)")
        ->check(CLI::IsMember({"config", "artistic", "photo", "sweep"}));
    rem->add_flag("--photo-domain", photo_domain, "inputs are photographs: grayscale only");

    auto* fin = app.add_subcommand("finetune", "fine-tune the model towards one style image");
    FinetuneArgs fin_args;
    std::string style_path, contents_dir;
    fin->add_option("--style", style_path, "style image")->required()->check(CLI::ExistingFile);
    fin->add_option("--contents", contents_dir, "directory of content photos")->check(CLI::ExistingDirectory);

    auto* sty = app.add_subcommand("stylize", "transfer the tuned style onto content photos");
    std::vector<std::string> sty_inputs;
    std::string t_trans;
    StylizeArgs sty_args;
    sty->add_option("inputs", sty_inputs, "content PNGs")->required()->check(CLI::ExistingFile);
    sty->add_option("--t-trans", t_trans, "comma-separated return steps, e.g. 101,201,301,401,601");
    sty->add_option("--diverse", sty_args.diverse, "number of stochastic variants per content");
    sty->add_flag("--styled-input", sty_args.styled_input, "run full style removal on the inputs first");

    auto* eva = app.add_subcommand("evaluate", "SSIM, style score and Gram distance over a pairs file");
    std::string pairs;
    eva->add_option("pairs", pairs, "tab-separated pairs file")->required()->check(CLI::ExistingFile);

    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    std::string only, work;
    ver->add_option("--only", only, "comma-separated criterion numbers");
    ver->add_option("--work-dir", work, "scratch directory (default <out>/verify)");

    auto* grd = app.add_subcommand("grid", "tile labelled images into one PNG");
    GridArgs grid_args;
    std::vector<std::string> grid_inputs;
    std::string labels, grid_out;
    grd->add_option("inputs", grid_inputs, "PNGs in row-major order")->required()->check(CLI::ExistingFile);
    grd->add_option("--labels", labels, "comma-separated labels (default: file names)");
    grd->add_option("--rows", grid_args.rows, "rows");
    grd->add_option("--cols", grid_args.cols, "columns (default: all in one row)");
    grd->add_option("--output", grid_out, "output PNG (default <out>/grid.png)");

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx;
        if (!config_path.empty()) ctx.config = RunConfig::from_file(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) ctx.config.set("seed", std::to_string(*seed));
        ctx.out = out_dir;
        ctx.threads = resolve_thread_count(threads);
        if (!quiet) ctx.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };

        if (*gen) {
            cmd_gen_data(ctx);
        } else if (*pre) {
            cmd_pretrain(ctx, resume.empty() ? std::nullopt : std::optional<Path>(resume));
        } else if (*rem) {
            if (photo_domain) ctx.config.set("removal.skip_diffusion", "true");
            const RemovalPreset p = preset == "artistic" ? RemovalPreset::artistic
                                    : preset == "photo"  ? RemovalPreset::photo
                                    : preset == "sweep"  ? RemovalPreset::sweep
                                                         : RemovalPreset::config;
            cmd_remove_style(ctx, {rem_inputs.begin(), rem_inputs.end()}, p);
        } else if (*fin) {
            fin_args.style = style_path;
            if (!contents_dir.empty()) fin_args.contents = Path(contents_dir);
            cmd_finetune(ctx, fin_args);
        } else if (*sty) {
            sty_args.contents.assign(sty_inputs.begin(), sty_inputs.end());
            sty_args.t_trans = parse_ints(t_trans);
            cmd_stylize(ctx, sty_args);
        } else if (*eva) {
            std::cout << cmd_evaluate(ctx, pairs);
        } else if (*ver) {
            return cmd_verify(ctx, {parse_ints(only), work});
        } else if (*grd) {
            grid_args.inputs.assign(grid_inputs.begin(), grid_inputs.end());
            grid_args.labels = split_commas(labels);
            grid_args.output = grid_out;
            std::cout << cmd_grid(ctx, grid_args).string() << '\n';
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "styldiff: %s\n", e.what());
        return 1;
    }
    return 0;
}
