// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "styldiff/error.hpp"
#include "styldiff/rng.hpp"

namespace styldiff::cli {
namespace {

struct Default {
    const char* key;
    const char* value;
};

// Every accepted key. Module seeds default to "auto" so that --seed alone
// changes a whole run.
constexpr Default kDefaults[] = {
    {"seed", "0"},
    {"schedule.T", "1000"},
    {"schedule.beta_start", "0.0001"},
    {"schedule.beta_end", "0.02"},
    {"denoiser.image_size", "32"},
    {"denoiser.base_width", "8"},
    {"denoiser.levels", "2"},
    {"denoiser.time_embed_dim", "64"},
    {"denoiser.seed", "auto"},
    {"pretrain.steps", "20000"},
    {"pretrain.lr", "0.0002"},
    {"pretrain.batch", "16"},
    {"pretrain.precision", "f32"},
    {"pretrain.seed", "auto"},
    {"data.n", "512"},
    {"data.size", "32"},
    {"data.styles_per_kind", "4"},
    {"data.seed", "auto"},
    {"removal.T_remov", "601"},
    {"removal.S_for", "40"},
    {"removal.S_rev", "40"},
    {"removal.K_r", "5"},
    {"removal.skip_diffusion", "false"},
    {"finetune.T_trans", "301"},
    {"finetune.S_for", "40"},
    {"finetune.S_rev", "6"},
    {"finetune.epochs", "5"},
    {"finetune.K_s", "50"},
    {"finetune.n_contents", "16"},
    {"finetune.base_lr", "0.0001"},
    {"finetune.lr_growth", "0.2"},
    {"finetune.lambda_l1", "10"},
    {"finetune.lambda_dir", "1"},
    {"finetune.sr_substep", "true"},
    {"finetune.precision", "f32"},
    {"finetune.seed", "auto"},
    {"projector.seed", "0x53444c50"},
    {"paths.data", "data"},
    {"paths.model", "model.sdfz"},
    {"paths.tuned", "tuned.sdfz"},
    {"paths.latents", ""},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t key_stream(std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what) {
    throw ConfigError("config: " + std::string(key) + " = '" + std::string(value) + "' is not " + what);
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& d : kDefaults) values_.emplace(d.key, d.value);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    RunConfig c;
    c.merge_text(ss.str(), path.string());
    return c;
}

void RunConfig::merge_text(std::string_view text, std::string_view origin) {
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(pos, end - pos));
        ++lineno;
        pos = end + 1;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (!is_known(key)) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        set(key, trim(std::string_view(line).substr(eq + 1)));
    }
}

bool RunConfig::is_known(std::string_view key) const { return values_.find(key) != values_.end(); }

void RunConfig::set(std::string_view key, std::string value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + std::string(key) + "'");
    it->second = std::move(value);
}

const std::string& RunConfig::get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + std::string(key) + "'");
    return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
    const std::string& v = get(key);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
    const std::string& v = get(key);
    const bool hex = v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X');
    const char* first = v.data() + (hex ? 2 : 0);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out, hex ? 16 : 10);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
    return out;
}

double RunConfig::get_double(std::string_view key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) bad_value(key, v, "a number");
    return out;
}

bool RunConfig::get_bool(std::string_view key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::uint64_t RunConfig::get_seed(std::string_view key) const {
    if (get(key) == "auto") return derive_seed(get_u64("seed"), key_stream(key));
    return get_u64(key);
}

std::string RunConfig::resolved_text() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        const bool auto_seed = value == "auto" && key.size() > 5 && key.compare(key.size() - 5, 5, ".seed") == 0;
        out += key + " = " + (auto_seed ? std::to_string(get_seed(key)) : value) + "\n";
    }
    return out;
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / kResolvedConfigName, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / kResolvedConfigName).string());
    f << resolved_text();
}

NoiseSchedule RunConfig::schedule() const {
    return NoiseSchedule::linear(static_cast<int>(get_int("schedule.T")), get_double("schedule.beta_start"),
                                 get_double("schedule.beta_end"));
}

DenoiserConfig RunConfig::denoiser() const {
    DenoiserConfig c;
    c.image_size = static_cast<int>(get_int("denoiser.image_size"));
    c.base_width = static_cast<int>(get_int("denoiser.base_width"));
    c.levels = static_cast<int>(get_int("denoiser.levels"));
    c.time_embed_dim = static_cast<int>(get_int("denoiser.time_embed_dim"));
    c.seed = get_seed("denoiser.seed");
    c.validate();
    return c;
}

PretrainOptions RunConfig::pretrain() const {
    PretrainOptions o;
    o.steps = static_cast<int>(get_int("pretrain.steps"));
    o.lr = get_double("pretrain.lr");
    o.batch = static_cast<int>(get_int("pretrain.batch"));
    o.seed = get_seed("pretrain.seed");
    return o;
}

RemovalConfig RunConfig::removal() const {
    RemovalConfig c;
    c.T_remov = static_cast<int>(get_int("removal.T_remov"));
    c.S_for = static_cast<int>(get_int("removal.S_for"));
    c.S_rev = static_cast<int>(get_int("removal.S_rev"));
    c.K_r = static_cast<int>(get_int("removal.K_r"));
    c.skip_diffusion = get_bool("removal.skip_diffusion");
    return c;
}

FinetuneConfig RunConfig::finetune() const {
    FinetuneConfig c;
    c.T_trans = static_cast<int>(get_int("finetune.T_trans"));
    c.S_for = static_cast<int>(get_int("finetune.S_for"));
    c.S_rev = static_cast<int>(get_int("finetune.S_rev"));
    c.epochs = static_cast<int>(get_int("finetune.epochs"));
    c.K_s = static_cast<int>(get_int("finetune.K_s"));
    c.n_contents = static_cast<int>(get_int("finetune.n_contents"));
    c.base_lr = get_double("finetune.base_lr");
    c.lr_growth = get_double("finetune.lr_growth");
    c.weights.lambda_l1 = get_double("finetune.lambda_l1");
    c.weights.lambda_dir = get_double("finetune.lambda_dir");
    c.sr_substep = get_bool("finetune.sr_substep");
    c.seed = get_seed("finetune.seed");
    return c;
}

Projector RunConfig::projector() const { return Projector(get_u64("projector.seed")); }

}  // namespace styldiff::cli
