// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "styldiff/ndarray.hpp"
#include "styldiff/ops.hpp"

namespace styldiff::kernels {

struct ConvDims {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t pad = 0;
    Padding padding = Padding::zeros;
    std::size_t out_height = 0;
    std::size_t out_width = 0;
};

ConvDims conv_dims(std::size_t channels, std::size_t height, std::size_t width, std::size_t kernel,
                   ConvGeometry geometry);

NdArray conv2d_forward(const NdArray& x, const NdArray& w, ConvGeometry geometry);
/// Accumulates into dx / dw when non-null.
void conv2d_backward(const NdArray& x, const NdArray& w, ConvGeometry geometry, const NdArray& dout, NdArray* dx,
                     NdArray* dw);
/// d loss / d x as a fresh array.
NdArray conv2d_input_grad(const Shape& x_shape, const NdArray& w, ConvGeometry geometry, const NdArray& dout);

NdArray conv_transpose2d_forward(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad);
void conv_transpose2d_backward(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad,
                               const NdArray& dout, NdArray* dx, NdArray* dw);

/// C[m, n] = op(A) op(B), all row-major, at the thread's compute precision.
/// When `accumulate` is set the product is added to C.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate);

}  // namespace styldiff::kernels
