// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "styldiff/error.hpp"

namespace styldiff {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the handler records the message first.
struct PngError {
    char message[256] = {};
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    auto* err = static_cast<PngError*>(png_get_error_ptr(png));
    std::snprintf(err->message, sizeof err->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// 3x5 glyphs, one row per 3 bits, top row first.
struct Glyph {
    char c;
    std::array<std::uint8_t, 5> rows;
};

constexpr Glyph kFont[] = {
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 2, 2}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'A', {2, 5, 7, 5, 5}}, {'B', {6, 5, 6, 5, 6}},
    {'C', {3, 4, 4, 4, 3}}, {'D', {6, 5, 5, 5, 6}}, {'E', {7, 4, 6, 4, 7}}, {'F', {7, 4, 6, 4, 4}},
    {'G', {3, 4, 5, 5, 3}}, {'H', {5, 5, 7, 5, 5}}, {'I', {7, 2, 2, 2, 7}}, {'J', {1, 1, 1, 5, 2}},
    {'K', {5, 5, 6, 5, 5}}, {'L', {4, 4, 4, 4, 7}}, {'M', {5, 7, 7, 5, 5}}, {'N', {6, 5, 5, 5, 5}},
    {'O', {2, 5, 5, 5, 2}}, {'P', {6, 5, 6, 4, 4}}, {'Q', {2, 5, 5, 6, 3}}, {'R', {6, 5, 6, 5, 5}},
    {'S', {3, 4, 2, 1, 6}}, {'T', {7, 2, 2, 2, 2}}, {'U', {5, 5, 5, 5, 7}}, {'V', {5, 5, 5, 5, 2}},
    {'W', {5, 5, 7, 7, 5}}, {'X', {5, 5, 2, 5, 5}}, {'Y', {5, 5, 2, 2, 2}}, {'Z', {7, 1, 2, 4, 7}},
    {'=', {0, 7, 0, 7, 0}}, {'-', {0, 0, 7, 0, 0}}, {'.', {0, 0, 0, 0, 2}}, {'_', {0, 0, 0, 0, 7}},
    {':', {0, 2, 0, 2, 0}}, {'/', {1, 1, 2, 4, 4}},
};

const Glyph* find_glyph(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kFont) {
        if (g.c == c) return &g;
    }
    return nullptr;  // blank
}

}  // namespace

NdArray luma(const NdArray& img) {
    const bool batched = img.rank() == 4;
    if (!(img.rank() == 3 || batched) || img.extent(batched ? 1 : 0) != 3) {
        throw ShapeError("luma: expected 3 channels, got " + to_string(img.shape()));
    }
    const std::size_t n = batched ? img.extent(0) : 1;
    const std::size_t plane = img.size() / (3 * n);
    NdArray out = NdArray::uninitialized(img.shape());
    for (std::size_t b = 0; b < n; ++b) {
        const double* x = img.raw() + b * 3 * plane;
        double* y = out.raw() + b * 3 * plane;
        for (std::size_t p = 0; p < plane; ++p) {
            const double L = 0.299 * x[p] + 0.587 * x[plane + p] + 0.114 * x[2 * plane + p];
            y[p] = y[plane + p] = y[2 * plane + p] = L;
        }
    }
    return out;
}

std::uint8_t encode_byte(double v) {
    const double u = (std::clamp(v, -1.0, 1.0) + 1.0) * 127.5;
    return static_cast<std::uint8_t>(std::round(u));  // std::round: half away from zero
}

double decode_byte(std::uint8_t p) { return 2.0 * p / 255.0 - 1.0; }

void write_png(const std::filesystem::path& path, const NdArray& img) {
    if (img.rank() != 3 || img.extent(0) != 3) throw ShapeError("write_png: expected {3, H, W}, got " + to_string(img.shape()));
    const std::size_t H = img.extent(1), W = img.extent(2), plane = H * W;
    std::vector<std::uint8_t> rgb(3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t ch = 0; ch < 3; ++ch) rgb[3 * p + ch] = encode_byte(img[ch * plane + p]);
    }

    File f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write " + path.string());
    PngError err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    // No objects with destructors are created between setjmp and the last
    // libpng call.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(std::string("png: ") + err.message);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 9);
    png_write_info(png, info);
    for (std::size_t y = 0; y < H; ++y) png_write_row(png, rgb.data() + 3 * W * y);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(f.get()) != 0) throw Error("write failed: " + path.string());
}

NdArray read_png(const std::filesystem::path& path) {
    File f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot read " + path.string());
    PngError err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: " + path.string() + ": " + err.message);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    // Normalise anything readable to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const std::size_t W = png_get_image_width(png, info), H = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != 3 * W) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: unsupported pixel layout in " + path.string());
    }
    std::vector<std::uint8_t> rgb(3 * W * H);
    // Re-arm so a failure while reading rows unwinds to a point where rgb
    // is already alive.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: " + path.string() + ": " + err.message);
    }
    for (std::size_t y = 0; y < H; ++y) png_read_row(png, rgb.data() + 3 * W * y, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    NdArray out = NdArray::uninitialized({3, H, W});
    const std::size_t plane = H * W;
    for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t ch = 0; ch < 3; ++ch) out[ch * plane + p] = decode_byte(rgb[3 * p + ch]);
    }
    return out;
}

NdArray make_grid(std::span<const GridTile> tiles, int rows, int cols) {
    if (rows < 1 || cols < 1) throw DomainError("grid: rows and cols must be positive");
    if (tiles.empty()) throw DomainError("grid: no tiles");
    if (tiles.size() > static_cast<std::size_t>(rows * cols)) throw DomainError("grid: more tiles than cells");
    const Shape& shape = tiles.front().image.shape();
    for (const auto& t : tiles) {
        if (t.image.rank() != 3 || t.image.extent(0) != 3) throw ShapeError("grid: tiles must be {3, H, W}");
        if (t.image.shape() != shape) {
            throw ShapeError("grid: tile sizes differ (" + to_string(shape) + " vs " + to_string(t.image.shape()) + ")");
        }
    }
    constexpr std::size_t gap = 2, strip = kLabelStripHeight;
    const std::size_t H = shape[1], W = shape[2];
    const std::size_t R = static_cast<std::size_t>(rows), C = static_cast<std::size_t>(cols);
    const std::size_t SH = R * (strip + H) + (R - 1) * gap, SW = C * W + (C - 1) * gap;
    NdArray sheet({3, SH, SW}, 1.0);  // white gutters
    const std::size_t plane = SH * SW;

    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const std::size_t r = i / C, c = i % C;
        const std::size_t top = r * (strip + H + gap), left = c * (W + gap);
        // Label strip: black background, white 3x5 glyphs with 1-px spacing.
        for (std::size_t y = 0; y < strip; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                for (std::size_t ch = 0; ch < 3; ++ch) sheet[ch * plane + (top + y) * SW + left + x] = -1.0;
            }
        }
        std::size_t pen = 1;
        for (char ch : tiles[i].label) {
            if (pen + 3 > W) break;
            if (const Glyph* g = find_glyph(ch)) {
                for (std::size_t gy = 0; gy < 5; ++gy) {
                    for (std::size_t gx = 0; gx < 3; ++gx) {
                        if (!((g->rows[gy] >> (2 - gx)) & 1)) continue;
                        for (std::size_t k = 0; k < 3; ++k) sheet[k * plane + (top + 1 + gy) * SW + left + pen + gx] = 1.0;
                    }
                }
            }
            pen += 4;
        }
        const NdArray& img = tiles[i].image;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            for (std::size_t y = 0; y < H; ++y) {
                std::copy_n(img.raw() + (ch * H + y) * W, W, sheet.raw() + ch * plane + (top + strip + y) * SW + left);
            }
        }
    }
    return sheet;
}

}  // namespace styldiff
