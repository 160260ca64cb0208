// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "styldiff/ndarray.hpp"

namespace styldiff {

/// L = 0.299 R + 0.587 G + 0.114 B, replicated to all three channels.
/// Accepts `{3, H, W}` or `{N, 3, H, W}`.
NdArray luma(const NdArray& img);

/// Byte p encodes 2p/255 - 1. Encoding clamps to [-1, 1] and rounds half
/// away from zero.
std::uint8_t encode_byte(double v);
double decode_byte(std::uint8_t p);

/// 8-bit RGB PNG. Output bytes depend only on the pixel values.
void write_png(const std::filesystem::path& path, const NdArray& img);
NdArray read_png(const std::filesystem::path& path);

struct GridTile {
    NdArray image;
    std::string label;
};

/// Row-major contact sheet: each tile gets a label strip above it, tiles are
/// separated by 2-pixel gutters. All images must share one shape.
NdArray make_grid(std::span<const GridTile> tiles, int rows, int cols);

/// Height of the label strip make_grid() places above every tile.
inline constexpr int kLabelStripHeight = 7;

}  // namespace styldiff
