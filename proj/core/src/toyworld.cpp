// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/toyworld.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "styldiff/error.hpp"
#include "styldiff/rng.hpp"

namespace styldiff {
namespace {

enum class ShapeKind { disc, rectangle, triangle };

struct Shape2d {
    ShapeKind kind;
    Rgb color;
    double cx, cy;
    double rx, ry;                   // disc radius in rx; rectangle half extents
    std::array<double, 6> vertices;  // triangle
};

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

bool inside(const Shape2d& s, double x, double y) {
    switch (s.kind) {
        case ShapeKind::disc: {
            const double dx = x - s.cx, dy = y - s.cy;
            return dx * dx + dy * dy <= s.rx * s.rx;
        }
        case ShapeKind::rectangle:
            return std::abs(x - s.cx) <= s.rx && std::abs(y - s.cy) <= s.ry;
        case ShapeKind::triangle: {
            const auto& v = s.vertices;
            const double d0 = cross(v[2] - v[0], v[3] - v[1], x - v[0], y - v[1]);
            const double d1 = cross(v[4] - v[2], v[5] - v[3], x - v[2], y - v[3]);
            const double d2 = cross(v[0] - v[4], v[1] - v[5], x - v[4], y - v[5]);
            return (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0);
        }
    }
    return false;
}

Rgb random_color(Rng& rng, double lo, double hi) { return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)}; }

double luma_of(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

void require_image(const NdArray& img, const char* op) {
    if (img.rank() != 3 || img.extent(0) != 3) {
        throw ShapeError(std::string(op) + ": expected a {3, H, W} image, got " + to_string(img.shape()));
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s) {
    // std::from_chars for double is missing from older libstdc++.
    std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw FormatError("bad number '" + tmp + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::pair<std::string, std::string>> split_params(std::string_view params) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos < params.size()) {
        std::size_t end = params.find(';', pos);
        if (end == std::string_view::npos) end = params.size();
        const std::string_view item = params.substr(pos, end - pos);
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) throw FormatError("bad parameter '" + std::string(item) + "'");
        out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
        pos = end + 1;
    }
    return out;
}

}  // namespace

std::uint64_t content_seed(std::uint64_t corpus_seed, int index) {
    return derive_seed(corpus_seed, static_cast<std::uint64_t>(index));
}

NdArray gen_content_image(std::uint64_t seed, int size) {
    if (size < 1) throw DomainError("gen_content: size must be positive");
    Rng rng(seed);
    const Rgb c0 = random_color(rng, -0.8, 0.8);
    const Rgb c1 = random_color(rng, -0.8, 0.8);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(phi), gy = std::sin(phi);

    const double S = size;
    std::vector<Shape2d> shapes(static_cast<std::size_t>(rng.uniform_int(1, 3)));
    for (auto& s : shapes) {
        s.kind = static_cast<ShapeKind>(rng.uniform_int(0, 2));
        s.color = random_color(rng, -1.0, 1.0);
        s.cx = rng.uniform(0.15, 0.85) * S;
        s.cy = rng.uniform(0.15, 0.85) * S;
        s.rx = rng.uniform(0.12, 0.3) * S;
        s.ry = rng.uniform(0.12, 0.3) * S;
        const double turn = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int k = 0; k < 3; ++k) {
            const double a = turn + 2.0 * std::numbers::pi * k / 3.0 + rng.uniform(-0.4, 0.4);
            const double r = s.rx * rng.uniform(1.0, 1.6);
            s.vertices[2 * k] = s.cx + r * std::cos(a);
            s.vertices[2 * k + 1] = s.cy + r * std::sin(a);
        }
    }

    // Gradient coordinate normalised so the background spans c0..c1 across
    // the image whatever the direction.
    const double span = (std::abs(gx) + std::abs(gy)) * S;
    const double origin = std::min(0.0, gx * S) + std::min(0.0, gy * S);

    const auto n = static_cast<std::size_t>(size);
    NdArray img({3, n, n});
    double* out = img.raw();
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            Rgb acc{0, 0, 0};
            // 2x2 supersampling
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    const double px = static_cast<double>(x) + 0.25 + 0.5 * sx;
                    const double py = static_cast<double>(y) + 0.25 + 0.5 * sy;
                    const double g = std::clamp((gx * px + gy * py - origin) / span, 0.0, 1.0);
                    Rgb c{c0[0] + g * (c1[0] - c0[0]), c0[1] + g * (c1[1] - c0[1]), c0[2] + g * (c1[2] - c0[2])};
                    for (const auto& s : shapes) {
                        if (inside(s, px, py)) c = s.color;
                    }
                    for (int ch = 0; ch < 3; ++ch) acc[ch] += c[ch];
                }
            }
            for (std::size_t ch = 0; ch < 3; ++ch) out[(ch * n + y) * n + x] = std::clamp(0.25 * acc[ch], -1.0, 1.0);
        }
    }
    return img;
}

std::vector<NdArray> gen_content(std::uint64_t seed, int n, int size) {
    if (n < 1) throw DomainError("gen_content: need n >= 1");
    std::vector<NdArray> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(gen_content_image(content_seed(seed, i), size));
    return out;
}

std::string_view to_string(StyleKind kind) {
    switch (kind) {
        case StyleKind::stripes: return "stripes";
        case StyleKind::blocks: return "blocks";
        case StyleKind::palette: return "palette";
        case StyleKind::speckle: return "speckle";
    }
    return "?";
}

StyleKind parse_style_kind(std::string_view name) {
    for (StyleKind k : kAllStyleKinds) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown style kind '" + std::string(name) + "'");
}

void StyleSpec::validate() const {
    switch (kind) {
        case StyleKind::stripes:
            if (!(period >= 2.0)) throw DomainError("stripes: period must be >= 2");
            if (!std::isfinite(angle)) throw DomainError("stripes: angle must be finite");
            if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw DomainError("stripes: amplitude must lie in [0, 1]");
            break;
        case StyleKind::blocks:
            if (cell < 1) throw DomainError("blocks: cell must be >= 1");
            break;
        case StyleKind::palette:
            for (const auto& c : colors) {
                for (double v : c) {
                    if (!(v >= -1.0 && v <= 1.0)) throw DomainError("palette: colours must lie in [-1, 1]");
                }
            }
            break;
        case StyleKind::speckle:
            if (!(density >= 0.0 && density <= 1.0)) throw DomainError("speckle: density must lie in [0, 1]");
            if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw DomainError("speckle: amplitude must lie in [0, 1]");
            break;
    }
}

StyleSpec random_style(StyleKind kind, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x5354594cULL));
    StyleSpec s;
    s.kind = kind;
    s.seed = seed;
    switch (kind) {
        case StyleKind::stripes:
            s.period = static_cast<double>(rng.uniform_int(3, 8));
            s.angle = rng.uniform(0.0, std::numbers::pi);
            s.amplitude = rng.uniform(0.5, 0.8);
            break;
        case StyleKind::blocks:
            s.cell = static_cast<int>(rng.uniform_int(3, 6));
            break;
        case StyleKind::palette:
            for (auto& c : s.colors) c = random_color(rng, -1.0, 1.0);
            std::sort(s.colors.begin(), s.colors.end(), [](const Rgb& a, const Rgb& b) { return luma_of(a) < luma_of(b); });
            break;
        case StyleKind::speckle:
            s.density = rng.uniform(0.3, 0.7);
            s.amplitude = rng.uniform(0.5, 0.9);
            break;
    }
    return s;
}

NdArray apply_style(const NdArray& content, const StyleSpec& spec) {
    require_image(content, "apply_style");
    spec.validate();
    const std::size_t H = content.extent(1), W = content.extent(2), plane = H * W;
    NdArray out = content;
    double* o = out.raw();
    const double* c = content.raw();

    switch (spec.kind) {
        case StyleKind::stripes: {
            // In [0, 1] intensity u the grating multiplies by 1 - a w; in
            // [-1, 1] units that is c - (c + 1) a w.
            const double kx = std::cos(spec.angle), ky = std::sin(spec.angle);
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    const double phase = 2.0 * std::numbers::pi * (kx * static_cast<double>(x) + ky * static_cast<double>(y)) / spec.period;
                    const double w = spec.amplitude * (0.5 - 0.5 * std::cos(phase));
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        const std::size_t i = ch * plane + y * W + x;
                        o[i] = c[i] - (c[i] + 1.0) * w;
                    }
                }
            }
            break;
        }
        case StyleKind::speckle: {
            Rng rng(spec.seed);
            for (std::size_t p = 0; p < plane; ++p) {
                const bool grain = rng.uniform() < spec.density;
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const double n = rng.normal();
                    if (!grain) continue;
                    const std::size_t i = ch * plane + p;
                    o[i] = std::clamp(c[i] + (c[i] + 1.0) * spec.amplitude * n, -1.0, 1.0);
                }
            }
            break;
        }
        case StyleKind::palette: {
            for (std::size_t p = 0; p < plane; ++p) {
                const double L = 0.299 * c[p] + 0.587 * c[plane + p] + 0.114 * c[2 * plane + p];
                const std::size_t bin = L < -0.5 ? 0 : L < 0.0 ? 1 : L < 0.5 ? 2 : 3;
                for (std::size_t ch = 0; ch < 3; ++ch) o[ch * plane + p] = spec.colors[bin][ch];
            }
            break;
        }
        case StyleKind::blocks: {
            const auto cell = static_cast<std::size_t>(spec.cell);
            for (std::size_t ch = 0; ch < 3; ++ch) {
                for (std::size_t by = 0; by < H; by += cell) {
                    for (std::size_t bx = 0; bx < W; bx += cell) {
                        const std::size_t ye = std::min(H, by + cell), xe = std::min(W, bx + cell);
                        double s = 0.0;
                        for (std::size_t y = by; y < ye; ++y) {
                            for (std::size_t x = bx; x < xe; ++x) s += c[ch * plane + y * W + x];
                        }
                        const double m = s / static_cast<double>((ye - by) * (xe - bx));
                        for (std::size_t y = by; y < ye; ++y) {
                            for (std::size_t x = bx; x < xe; ++x) o[ch * plane + y * W + x] = m;
                        }
                    }
                }
            }
            break;
        }
    }
    out.require_finite("apply_style");
    return out;
}

std::string format_style_params(const StyleSpec& spec) {
    switch (spec.kind) {
        case StyleKind::stripes:
            return "period=" + fmt(spec.period) + ";angle=" + fmt(spec.angle) + ";amplitude=" + fmt(spec.amplitude);
        case StyleKind::blocks:
            return "cell=" + std::to_string(spec.cell);
        case StyleKind::palette: {
            std::string s;
            for (std::size_t i = 0; i < 4; ++i) {
                if (i) s += ';';
                s += "c" + std::to_string(i) + "=" + fmt(spec.colors[i][0]) + "," + fmt(spec.colors[i][1]) + "," +
                     fmt(spec.colors[i][2]);
            }
            return s;
        }
        case StyleKind::speckle:
            return "density=" + fmt(spec.density) + ";amplitude=" + fmt(spec.amplitude);
    }
    return {};
}

StyleSpec parse_style_params(StyleKind kind, std::uint64_t seed, std::string_view params) {
    StyleSpec s;
    s.kind = kind;
    s.seed = seed;
    for (const auto& [key, value] : split_params(params)) {
        if (key == "period") s.period = parse_double(value);
        else if (key == "angle") s.angle = parse_double(value);
        else if (key == "amplitude") s.amplitude = parse_double(value);
        else if (key == "cell") s.cell = static_cast<int>(parse_u64(value));
        else if (key == "density") s.density = parse_double(value);
        else if (key.size() == 2 && key[0] == 'c' && key[1] >= '0' && key[1] <= '3') {
            Rgb rgb{};
            std::size_t pos = 0;
            for (std::size_t ch = 0; ch < 3; ++ch) {
                std::size_t end = value.find(',', pos);
                if ((end == std::string::npos) != (ch == 2)) throw FormatError("palette colour needs 3 components");
                if (end == std::string::npos) end = value.size();
                rgb[ch] = parse_double(std::string_view(value).substr(pos, end - pos));
                pos = end + 1;
            }
            s.colors[static_cast<std::size_t>(key[1] - '0')] = rgb;
        } else if (key != "content") {
            throw FormatError("unknown style parameter '" + key + "'");
        }
    }
    s.validate();
    return s;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    for (const auto& e : entries) f << e.id << '\t' << e.seed << '\t' << e.kind << '\t' << e.params << '\n';
    if (!f) throw Error("write failed: " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() == 3 && line.back() == '\t') fields.emplace_back();
        if (fields.size() != 4) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields");
        }
        out.push_back({fields[0], parse_u64(fields[1]), fields[2], fields[3]});
    }
    return out;
}

NdArray render_entry(const ManifestEntry& entry, const std::vector<ManifestEntry>& entries) {
    const auto params = split_params(entry.params);
    auto lookup = [&](const std::string& key) -> std::string {
        for (const auto& [k, v] : params) {
            if (k == key) return v;
        }
        throw FormatError("manifest entry " + entry.id + " lacks '" + key + "'");
    };
    if (entry.kind == "content") return gen_content_image(entry.seed, static_cast<int>(parse_u64(lookup("size"))));
    const std::string source = lookup("content");
    for (const auto& e : entries) {
        if (e.id == source && e.kind == "content") {
            return apply_style(render_entry(e, entries), parse_style_params(parse_style_kind(entry.kind), entry.seed, entry.params));
        }
    }
    throw FormatError("manifest entry " + entry.id + " names unknown content '" + source + "'");
}

}  // namespace styldiff
