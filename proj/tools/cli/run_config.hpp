// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "styldiff/denoiser.hpp"
#include "styldiff/disentangle.hpp"
#include "styldiff/finetune.hpp"
#include "styldiff/removal.hpp"
#include "styldiff/schedule.hpp"

namespace styldiff::cli {

/// Flat `key = value` configuration covering every module setting. Keys are
/// fixed; unknown keys and malformed values are ConfigErrors. Lines starting
/// with '#' are comments.
class RunConfig {
public:
    /// All keys at their defaults.
    RunConfig();

    static RunConfig from_file(const std::filesystem::path& path);
    /// Applies the `key = value` lines of `text` on top of the current values.
    void merge_text(std::string_view text, std::string_view origin = "<text>");

    void set(std::string_view key, std::string value);
    const std::string& get(std::string_view key) const;
    bool is_known(std::string_view key) const;

    std::int64_t get_int(std::string_view key) const;
    double get_double(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    std::uint64_t get_u64(std::string_view key) const;
    /// Keys ending in ".seed" may be "auto": derived from the global seed and
    /// a fixed per-key stream.
    std::uint64_t get_seed(std::string_view key) const;

    /// Every key with its resolved value, sorted, one `key = value` per line.
    std::string resolved_text() const;
    void write_resolved(const std::filesystem::path& dir) const;

    NoiseSchedule schedule() const;
    DenoiserConfig denoiser() const;
    PretrainOptions pretrain() const;
    RemovalConfig removal() const;
    FinetuneConfig finetune() const;
    Projector projector() const;

private:
    std::map<std::string, std::string, std::less<>> values_;
};

/// File name of the echoed configuration inside output directories.
inline constexpr char kResolvedConfigName[] = "config.resolved";

}  // namespace styldiff::cli
