// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace styldiff::cli {

using Path = std::filesystem::path;

struct Context {
    RunConfig config;
    Path out = ".";
    int threads = 1;
    /// Progress lines; may be empty.
    std::function<void(const std::string&)> log;

    void say(const std::string& line) const {
        if (log) log(line);
    }
};

/// Writes contents/, styles/ and manifest.tsv under ctx.out.
void cmd_gen_data(const Context& ctx);

/// Trains on <paths.data>/contents/*.png. With `resume_dir`, continues the
/// run saved there until pretrain.steps total steps are done.
void cmd_pretrain(const Context& ctx, const std::optional<Path>& resume_dir);

enum class RemovalPreset { config, artistic, photo, sweep };
inline constexpr int kSweepReturnSteps[] = {201, 401, 601, 801};

/// Returns the written files: one per input, or one per sweep value.
std::vector<Path> cmd_remove_style(const Context& ctx, const std::vector<Path>& inputs, RemovalPreset preset);

struct FinetuneArgs {
    Path style;
    /// Directory of content photographs; defaults to <paths.data>/contents.
    std::optional<Path> contents;
};
void cmd_finetune(const Context& ctx, const FinetuneArgs& args);

struct StylizeArgs {
    std::vector<Path> contents;
    std::vector<int> t_trans;  // empty: finetune.T_trans
    int diverse = 0;
    /// Contents that are not photographs go through full style removal first.
    bool styled_input = false;
};
std::vector<Path> cmd_stylize(const Context& ctx, const StylizeArgs& args);

/// Pairs file: tab-separated "content_id style_id content.png style.png
/// output.png" per line, '#' comments. Paths are relative to the file.
/// Writes metrics.tsv under ctx.out and returns its text.
std::string cmd_evaluate(const Context& ctx, const Path& pairs);

struct VerifyArgs {
    std::vector<int> only;  // empty: all criteria
    Path work_dir;
};
/// Returns the process exit code: 0 when every selected criterion passes.
int cmd_verify(const Context& ctx, const VerifyArgs& args);

struct GridArgs {
    std::vector<Path> inputs;
    std::vector<std::string> labels;  // default: file stems
    int rows = 1;
    int cols = 0;  // 0: number of inputs
    Path output;   // default: <out>/grid.png
};
Path cmd_grid(const Context& ctx, const GridArgs& args);

/// Sorted *.png files of a directory.
std::vector<Path> list_pngs(const Path& dir);

}  // namespace styldiff::cli
