// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "styldiff/ndarray.hpp"

namespace styldiff {

// Procedural "photographs": a two-colour gradient background with one to
// three anti-aliased discs, rectangles or triangles.

/// One content image of side `size`, fully determined by `seed`.
NdArray gen_content_image(std::uint64_t seed, int size);
/// Image i uses content_seed(seed, i).
std::vector<NdArray> gen_content(std::uint64_t seed, int n, int size);
std::uint64_t content_seed(std::uint64_t corpus_seed, int index);

enum class StyleKind { stripes, blocks, palette, speckle };

std::string_view to_string(StyleKind kind);
StyleKind parse_style_kind(std::string_view name);
inline constexpr std::array<StyleKind, 4> kAllStyleKinds = {StyleKind::stripes, StyleKind::blocks,
                                                            StyleKind::palette, StyleKind::speckle};

using Rgb = std::array<double, 3>;

struct StyleSpec {
    StyleKind kind = StyleKind::stripes;
    // stripes: multiplicative cosine grating
    double period = 4.0;
    double angle = 0.0;  // radians
    // stripes and speckle: modulation depth in [0, 1]
    double amplitude = 0.6;
    // blocks: mosaic cell side in pixels
    int cell = 4;
    // palette: darkest to brightest, values in [-1, 1]
    std::array<Rgb, 4> colors{};
    // speckle: fraction of pixels carrying grain
    double density = 0.5;
    std::uint64_t seed = 0;

    /// Throws DomainError on parameters outside their ranges.
    void validate() const;
    friend bool operator==(const StyleSpec&, const StyleSpec&) = default;
};

/// Draws kind-specific parameters from `seed`.
StyleSpec random_style(StyleKind kind, std::uint64_t seed);

/// Renders the style into a `{3, H, W}` content image. Stripes and speckle
/// modulate intensity multiplicatively, palette quantises luminance onto
/// four colours, blocks averages square cells.
NdArray apply_style(const NdArray& content, const StyleSpec& spec);

/// `key=value` pairs joined by ';', and back. Round-trips exactly.
std::string format_style_params(const StyleSpec& spec);
StyleSpec parse_style_params(StyleKind kind, std::uint64_t seed, std::string_view params);

// Corpus manifest: one tab-separated line per image, "id seed kind params".
// Contents have kind "content" and params "size=N"; styled images name their
// source content with "content=<id>".
struct ManifestEntry {
    std::string id;
    std::uint64_t seed = 0;
    std::string kind;
    std::string params;
    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Rebuilds an image from its entry; styled images look up their content in
/// `entries`.
NdArray render_entry(const ManifestEntry& entry, const std::vector<ManifestEntry>& entries);

}  // namespace styldiff
