// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "styldiff/tape.hpp"

namespace styldiff {

// Differentiable primitives recorded on the tape of their operands. Binary
// ops require identical shapes; the only broadcast is scalar-with-array
// (a one-element operand) and the axis-1 channel ops below.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

Var abs(const Var& a);
/// Gradient at 0 is taken as 0.
Var sqrt(const Var& a);
Var square(const Var& a);
Var leaky_relu(const Var& a, double slope);
/// Gradient passes only where lo < a < hi.
Var clamp(const Var& a, double lo, double hi);

/// [m, k] x [k, n] -> [m, n]
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

/// Cosine similarity of two arrays viewed as flat vectors; both norms must be
/// nonzero.
Var cosine_similarity(const Var& a, const Var& b);

enum class Padding { zeros, replicate };

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t pad = 0;
    Padding padding = Padding::zeros;
};

/// x [N, C, H, W], w [O, C, k, k] -> [N, O, Ho, Wo]
Var conv2d(const Var& x, const Var& w, ConvGeometry geometry);
/// Same with a per-output-channel bias b [O].
Var conv2d(const Var& x, const Var& w, const Var& b, ConvGeometry geometry);
/// x [N, C, H, W], w [C, O, k, k] -> [N, O, (H-1)s - 2p + k, ...]; zero padding.
Var conv_transpose2d(const Var& x, const Var& w, std::size_t stride, std::size_t pad);
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, std::size_t stride, std::size_t pad);

// Channel ops act on axis 1 of x [N, C, ...]; `c` is [C] (shared across the
// batch) or [N, C].
Var channel_add(const Var& x, const Var& c);
Var channel_mul(const Var& x, const Var& c);
/// leaky_relu(x * scale + shift, slope) per channel in one pass; slope 1
/// gives the plain affine map. Requires 0 <= slope <= 1.
Var channel_affine(const Var& x, const Var& scale, const Var& shift, double slope = 1.0);
/// x [N, C, ...] -> [N, C], mean over the trailing axes.
Var spatial_mean(const Var& x);
/// Concatenates [N, C_i] arrays along axis 1.
Var concat_channels(std::span<const Var> parts);
/// Element `index` of axis 0 as a [1, ...] array.
Var select_batch(const Var& x, std::size_t index);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace styldiff
