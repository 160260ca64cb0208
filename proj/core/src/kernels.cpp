// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <memory>
#include <type_traits>
#include <vector>

#include "styldiff/error.hpp"

namespace styldiff::kernels {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const Mat<T>>;
template <typename T>
using Map = Eigen::Map<Mat<T>>;

template <typename T>
std::vector<T> convert(const double* src, std::size_t n) {
    std::vector<T> out(n);
    std::copy(src, src + n, out.begin());
    return out;
}

// Output columns ox whose source column ox * stride + kj - pad lies inside
// [0, width): [lo, hi).
struct ColumnRange {
    std::size_t lo;
    std::size_t hi;
};

ColumnRange valid_columns(const ConvDims& d, std::size_t kj) {
    const std::size_t lo = kj >= d.pad ? 0 : (d.pad - kj + d.stride - 1) / d.stride;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(d.width) - 1 + static_cast<std::ptrdiff_t>(d.pad) -
                                static_cast<std::ptrdiff_t>(kj);
    const std::size_t hi = last < 0 ? 0 : std::min(d.out_width, static_cast<std::size_t>(last) / d.stride + 1);
    return {std::min(lo, hi), hi};
}

// Source row for output row oy and kernel row ki, or -1 when it falls in
// zero padding.
std::ptrdiff_t source_row(const ConvDims& d, std::size_t oy, std::size_t ki) {
    auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - static_cast<std::ptrdiff_t>(d.pad);
    const auto h = static_cast<std::ptrdiff_t>(d.height);
    if (d.padding == Padding::replicate) return std::clamp<std::ptrdiff_t>(iy, 0, h - 1);
    return iy >= 0 && iy < h ? iy : -1;
}

// im2col for stride-1, zero-padded convs that keep the image size
// (kernel = 2 * pad + 1). Each kernel tap is the plane shifted by (dy, dx):
// one contiguous copy followed by zeroing the rows and columns that fell
// off the edge.
template <typename T>
void im2col_same(const T* x, std::size_t n, const ConvDims& d, T* col) {
    const auto H = static_cast<std::ptrdiff_t>(d.height), W = static_cast<std::ptrdiff_t>(d.width);
    const auto plane_size = H * W;
    const std::size_t row_stride = n * static_cast<std::size_t>(plane_size);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < d.channels; ++c) {
            const T* plane = x + (b * d.channels + c) * static_cast<std::size_t>(plane_size);
            for (std::size_t ki = 0; ki < d.kernel; ++ki) {
                for (std::size_t kj = 0; kj < d.kernel; ++kj) {
                    T* out = col + ((c * d.kernel + ki) * d.kernel + kj) * row_stride + b * static_cast<std::size_t>(plane_size);
                    const auto dy = static_cast<std::ptrdiff_t>(ki) - static_cast<std::ptrdiff_t>(d.pad);
                    const auto dx = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(d.pad);
                    const std::ptrdiff_t y_lo = std::clamp<std::ptrdiff_t>(-dy, 0, H);
                    const std::ptrdiff_t y_hi = std::clamp<std::ptrdiff_t>(H - dy, y_lo, H);
                    std::fill(out, out + y_lo * W, T(0));
                    std::fill(out + y_hi * W, out + plane_size, T(0));
                    const std::ptrdiff_t shift = dy * W + dx;
                    const std::ptrdiff_t p_lo = std::max(y_lo * W, -shift);
                    const std::ptrdiff_t p_hi = std::min(y_hi * W, plane_size - shift);
                    if (p_lo < p_hi) std::copy(plane + p_lo + shift, plane + p_hi + shift, out + p_lo);
                    // Positions outside [p_lo, p_hi) are edge columns; zero those.
                    const std::ptrdiff_t x_lo = std::clamp<std::ptrdiff_t>(-dx, 0, W);
                    const std::ptrdiff_t x_hi = std::clamp<std::ptrdiff_t>(W - dx, x_lo, W);
                    for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
                        T* row = out + y * W;
                        std::fill(row, row + x_lo, T(0));
                        std::fill(row + x_hi, row + W, T(0));
                    }
                }
            }
        }
    }
}

// Writes the im2col rows of `n` images into col, shaped
// [channels * k * k, n * out_height * out_width] with image b in columns
// [b * P, (b + 1) * P).
template <typename T>
void im2col(const T* x, std::size_t n, const ConvDims& d, T* col) {
    if (d.stride == 1 && d.padding == Padding::zeros && d.kernel == 2 * d.pad + 1) {
        im2col_same(x, n, d, col);
        return;
    }
    const std::size_t positions = d.out_height * d.out_width;
    const std::size_t row_stride = n * positions;
    const bool replicate = d.padding == Padding::replicate;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < d.channels; ++c) {
            const T* plane = x + (b * d.channels + c) * d.height * d.width;
            for (std::size_t ki = 0; ki < d.kernel; ++ki) {
                for (std::size_t kj = 0; kj < d.kernel; ++kj) {
                    T* row = col + ((c * d.kernel + ki) * d.kernel + kj) * row_stride + b * positions;
                    const ColumnRange r = valid_columns(d, kj);
                    const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(d.pad);
                    for (std::size_t oy = 0; oy < d.out_height; ++oy) {
                        T* out = row + oy * d.out_width;
                        const std::ptrdiff_t iy = source_row(d, oy, ki);
                        if (iy < 0) {
                            std::fill(out, out + d.out_width, T(0));
                            continue;
                        }
                        const T* src = plane + static_cast<std::size_t>(iy) * d.width;
                        const T left = replicate ? src[0] : T(0);
                        const T right = replicate ? src[d.width - 1] : T(0);
                        for (std::size_t ox = 0; ox < r.lo; ++ox) out[ox] = left;
                        if (d.stride == 1) {
                            std::copy(src + static_cast<std::ptrdiff_t>(r.lo) + offset,
                                      src + static_cast<std::ptrdiff_t>(r.hi) + offset, out + r.lo);
                        } else {
                            for (std::size_t ox = r.lo; ox < r.hi; ++ox) {
                                out[ox] = src[static_cast<std::ptrdiff_t>(ox * d.stride) + offset];
                            }
                        }
                        for (std::size_t ox = r.hi; ox < d.out_width; ++ox) out[ox] = right;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col; accumulates into x.
template <typename T>
void col2im(const T* col, std::size_t n, const ConvDims& d, double* x) {
    const std::size_t positions = d.out_height * d.out_width;
    const std::size_t row_stride = n * positions;
    const bool replicate = d.padding == Padding::replicate;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < d.channels; ++c) {
            double* plane = x + (b * d.channels + c) * d.height * d.width;
            for (std::size_t ki = 0; ki < d.kernel; ++ki) {
                for (std::size_t kj = 0; kj < d.kernel; ++kj) {
                    const T* row = col + ((c * d.kernel + ki) * d.kernel + kj) * row_stride + b * positions;
                    const ColumnRange r = valid_columns(d, kj);
                    const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(d.pad);
                    for (std::size_t oy = 0; oy < d.out_height; ++oy) {
                        const T* in = row + oy * d.out_width;
                        const std::ptrdiff_t iy = source_row(d, oy, ki);
                        if (iy < 0) continue;
                        double* dst = plane + static_cast<std::size_t>(iy) * d.width;
                        if (replicate) {
                            for (std::size_t ox = 0; ox < r.lo; ++ox) dst[0] += static_cast<double>(in[ox]);
                            for (std::size_t ox = r.hi; ox < d.out_width; ++ox) {
                                dst[d.width - 1] += static_cast<double>(in[ox]);
                            }
                        }
                        if (d.stride == 1) {
                            double* shifted = dst + offset;
                            for (std::size_t ox = r.lo; ox < r.hi; ++ox) shifted[ox] += static_cast<double>(in[ox]);
                        } else {
                            for (std::size_t ox = r.lo; ox < r.hi; ++ox) {
                                dst[static_cast<std::ptrdiff_t>(ox * d.stride) + offset] += static_cast<double>(in[ox]);
                            }
                        }
                    }
                }
            }
        }
    }
}

// [n, c, p] (double) -> [c, n * p] (T).
template <typename T>
std::vector<T> channel_major(const double* x, std::size_t n, std::size_t c, std::size_t p) {
    std::vector<T> out(n * c * p);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* src = x + (b * c + ch) * p;
            T* dst = out.data() + ch * n * p + b * p;
            for (std::size_t i = 0; i < p; ++i) dst[i] = static_cast<T>(src[i]);
        }
    return out;
}

// [c, n * p] (T) -> [n, c, p] (double), overwriting or accumulating.
template <typename T>
void batch_major(const T* src, std::size_t n, std::size_t c, std::size_t p, double* x, bool accumulate) {
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* s = src + ch * n * p + b * p;
            double* dst = x + (b * c + ch) * p;
            if (accumulate) {
                for (std::size_t i = 0; i < p; ++i) dst[i] += static_cast<double>(s[i]);
            } else {
                for (std::size_t i = 0; i < p; ++i) dst[i] = static_cast<double>(s[i]);
            }
        }
}

template <typename T>
void add_into(const T* src, std::size_t n, double* dst) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += static_cast<double>(src[i]);
}

// `src` as T: the original pointer at 64 bits, otherwise a converted copy
// in `buffer`.
template <typename T>
const T* as_compute(const double* src, std::size_t n, std::unique_ptr<T[]>& buffer) {
    if constexpr (std::is_same_v<T, double>) {
        return src;
    } else {
        if (!buffer) buffer.reset(new T[n]);
        for (std::size_t i = 0; i < n; ++i) buffer[i] = static_cast<T>(src[i]);
        return buffer.get();
    }
}

// Images per GEMM so the unfolded columns stay within L2.
std::size_t chunk_images(std::size_t bytes_per_image, std::size_t n) {
    constexpr std::size_t budget = std::size_t{1} << 20;
    return std::clamp<std::size_t>(budget / std::max<std::size_t>(bytes_per_image, 1), 1, n);
}

// Scratch without value-initialisation; every element is written before use.
template <typename T>
std::unique_ptr<T[]> scratch(std::size_t n) {
    return std::unique_ptr<T[]>(new T[n]);
}

template <typename T>
NdArray conv2d_forward_impl(const NdArray& x, const NdArray& w, ConvGeometry g) {
    const std::size_t n = x.extent(0), out_c = w.extent(0), k = w.extent(2);
    const ConvDims d = conv_dims(x.extent(1), x.extent(2), x.extent(3), k, g);
    const std::size_t rows = d.channels * k * k, positions = d.out_height * d.out_width;
    const std::size_t in_stride = d.channels * d.height * d.width, out_stride = out_c * positions;
    const std::size_t chunk = chunk_images(rows * positions * sizeof(T), n);
    const std::vector<T> wt = convert<T>(w.raw(), w.size());
    auto col = scratch<T>(rows * chunk * positions);
    auto out_t = scratch<T>(out_c * chunk * positions);
    std::unique_ptr<T[]> xbuf;
    NdArray out = NdArray::uninitialized({n, out_c, d.out_height, d.out_width});
    for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
        const std::size_t m = std::min(chunk, n - b0), cols = m * positions;
        im2col(as_compute<T>(x.raw() + b0 * in_stride, m * in_stride, xbuf), m, d, col.get());
        Map<T>(out_t.get(), out_c, cols).noalias() = MapC<T>(wt.data(), out_c, rows) * MapC<T>(col.get(), rows, cols);
        batch_major(out_t.get(), m, out_c, positions, out.raw() + b0 * out_stride, false);
    }
    return out;
}

// For stride-1 zero-padded convs the input gradient is itself a conv of
// dout with spatially flipped, channel-transposed kernels; this avoids the
// scatter in col2im.
template <typename T>
NdArray conv2d_gather_input_grad(const NdArray& w, ConvGeometry g, const NdArray& dout) {
    const std::size_t out_c = w.extent(0), in_c = w.extent(1), k = w.extent(2);
    NdArray flipped({in_c, out_c, k, k});
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t c = 0; c < in_c; ++c)
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    flipped[((c * out_c + o) * k + (k - 1 - i)) * k + (k - 1 - j)] = w[((o * in_c + c) * k + i) * k + j];
                }
    return conv2d_forward_impl<T>(dout, flipped, {1, k - 1 - g.pad, Padding::zeros});
}

template <typename T>
void conv2d_backward_impl(const NdArray& x, const NdArray& w, ConvGeometry g, const NdArray& dout, NdArray* dx,
                          NdArray* dw) {
    const std::size_t n = x.extent(0), out_c = w.extent(0), k = w.extent(2);
    const ConvDims d = conv_dims(x.extent(1), x.extent(2), x.extent(3), k, g);
    const std::size_t rows = d.channels * k * k, positions = d.out_height * d.out_width;
    const std::size_t in_stride = d.channels * d.height * d.width, out_stride = out_c * positions;
    const std::size_t chunk = chunk_images(rows * positions * sizeof(T), n);
    const std::vector<T> wt = convert<T>(w.raw(), w.size());
    const bool gather_dx = g.stride == 1 && g.padding == Padding::zeros && g.pad < k;
    auto col = scratch<T>(rows * chunk * positions);
    std::unique_ptr<T[]> xbuf;
    Mat<T> dw_acc = Mat<T>::Zero(dw ? out_c : 0, dw ? rows : 0);
    for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
        const std::size_t m = std::min(chunk, n - b0), cols = m * positions;
        if (!dw && gather_dx) break;
        const std::vector<T> go = channel_major<T>(dout.raw() + b0 * out_stride, m, out_c, positions);
        MapC<T> go_m(go.data(), out_c, cols);
        if (dw) {
            im2col(as_compute<T>(x.raw() + b0 * in_stride, m * in_stride, xbuf), m, d, col.get());
            dw_acc.noalias() += go_m * MapC<T>(col.get(), rows, cols).transpose();
        }
        if (dx && !gather_dx) {
            Map<T>(col.get(), rows, cols).noalias() = MapC<T>(wt.data(), out_c, rows).transpose() * go_m;
            col2im(col.get(), m, d, dx->raw() + b0 * in_stride);
        }
    }
    if (dw) add_into(dw_acc.data(), dw->size(), dw->raw());
    if (dx && gather_dx) {
        const NdArray gx = conv2d_gather_input_grad<T>(w, g, dout);
        add_into(gx.raw(), gx.size(), dx->raw());
    }
}

template <typename T>
NdArray conv_transpose2d_forward_impl(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad) {
    const std::size_t n = x.extent(0), in_c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const std::size_t out_c = w.extent(1), k = w.extent(2);
    const std::size_t oh = (h - 1) * stride + k - 2 * pad, ow = (wd - 1) * stride + k - 2 * pad;
    // The output image plays the role of a conv input whose conv output is x.
    const ConvDims d = conv_dims(out_c, oh, ow, k, {stride, pad, Padding::zeros});
    const std::size_t rows = out_c * k * k, positions = h * wd;
    const std::size_t chunk = chunk_images(rows * positions * sizeof(T), n);
    const std::vector<T> wt = convert<T>(w.raw(), w.size());
    auto col = scratch<T>(rows * chunk * positions);
    NdArray out({n, out_c, oh, ow});
    for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
        const std::size_t m = std::min(chunk, n - b0), cols = m * positions;
        const std::vector<T> xt = channel_major<T>(x.raw() + b0 * in_c * positions, m, in_c, positions);
        Map<T>(col.get(), rows, cols).noalias() =
            MapC<T>(wt.data(), in_c, rows).transpose() * MapC<T>(xt.data(), in_c, cols);
        col2im(col.get(), m, d, out.raw() + b0 * out_c * oh * ow);
    }
    return out;
}

template <typename T>
void conv_transpose2d_backward_impl(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad,
                                    const NdArray& dout, NdArray* dx, NdArray* dw) {
    const std::size_t n = x.extent(0), in_c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const std::size_t out_c = w.extent(1), k = w.extent(2);
    const std::size_t oh = dout.extent(2), ow = dout.extent(3);
    const ConvDims d = conv_dims(out_c, oh, ow, k, {stride, pad, Padding::zeros});
    const std::size_t rows = out_c * k * k, positions = h * wd;
    const std::size_t chunk = chunk_images(rows * positions * sizeof(T), n);
    const std::vector<T> wt = convert<T>(w.raw(), w.size());
    auto dcol = scratch<T>(rows * chunk * positions);
    std::unique_ptr<T[]> gbuf;
    auto dx_t = scratch<T>(dx ? in_c * chunk * positions : 0);
    Mat<T> dw_acc = Mat<T>::Zero(dw ? in_c : 0, dw ? rows : 0);
    for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
        const std::size_t m = std::min(chunk, n - b0), cols = m * positions;
        im2col(as_compute<T>(dout.raw() + b0 * out_c * oh * ow, m * out_c * oh * ow, gbuf), m, d, dcol.get());
        MapC<T> dcol_m(dcol.get(), rows, cols);
        if (dx) {
            Map<T>(dx_t.get(), in_c, cols).noalias() = MapC<T>(wt.data(), in_c, rows) * dcol_m;
            batch_major(dx_t.get(), m, in_c, positions, dx->raw() + b0 * in_c * positions, true);
        }
        if (dw) {
            const std::vector<T> xt = channel_major<T>(x.raw() + b0 * in_c * positions, m, in_c, positions);
            dw_acc.noalias() += MapC<T>(xt.data(), in_c, cols) * dcol_m.transpose();
        }
    }
    if (dw) add_into(dw_acc.data(), dw->size(), dw->raw());
}

template <typename T>
void gemm_impl(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c, bool accumulate) {
    const std::vector<T> at = convert<T>(a, m * k);
    const std::vector<T> bt = convert<T>(b, k * n);
    Mat<T> result(m, n);
    // Stored shapes: A is [m, k] or [k, m]; B is [k, n] or [n, k].
    if (!trans_a && !trans_b) {
        result.noalias() = MapC<T>(at.data(), m, k) * MapC<T>(bt.data(), k, n);
    } else if (trans_a && !trans_b) {
        result.noalias() = MapC<T>(at.data(), k, m).transpose() * MapC<T>(bt.data(), k, n);
    } else if (!trans_a && trans_b) {
        result.noalias() = MapC<T>(at.data(), m, k) * MapC<T>(bt.data(), n, k).transpose();
    } else {
        result.noalias() = MapC<T>(at.data(), k, m).transpose() * MapC<T>(bt.data(), n, k).transpose();
    }
    for (std::size_t i = 0; i < m * n; ++i) {
        const auto v = static_cast<double>(result.data()[i]);
        c[i] = accumulate ? c[i] + v : v;
    }
}

void require_rank4(const NdArray& a, const char* what) {
    if (a.rank() != 4) throw ShapeError(std::string(what) + ": expected rank-4 array, got " + to_string(a.shape()));
}

}  // namespace

ConvDims conv_dims(std::size_t channels, std::size_t height, std::size_t width, std::size_t kernel,
                   ConvGeometry geometry) {
    if (geometry.stride == 0) throw DomainError("conv: stride must be positive");
    if (kernel == 0 || height + 2 * geometry.pad < kernel || width + 2 * geometry.pad < kernel) {
        throw ShapeError("conv: kernel " + std::to_string(kernel) + " larger than padded input " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    ConvDims d;
    d.channels = channels;
    d.height = height;
    d.width = width;
    d.kernel = kernel;
    d.stride = geometry.stride;
    d.pad = geometry.pad;
    d.padding = geometry.padding;
    d.out_height = (height + 2 * geometry.pad - kernel) / geometry.stride + 1;
    d.out_width = (width + 2 * geometry.pad - kernel) / geometry.stride + 1;
    return d;
}

NdArray conv2d_forward(const NdArray& x, const NdArray& w, ConvGeometry geometry) {
    require_rank4(x, "conv2d input");
    require_rank4(w, "conv2d weight");
    if (w.extent(1) != x.extent(1) || w.extent(2) != w.extent(3)) {
        throw ShapeError("conv2d: weight " + to_string(w.shape()) + " incompatible with input " + to_string(x.shape()));
    }
    return compute_precision() == Precision::f32 ? conv2d_forward_impl<float>(x, w, geometry)
                                                 : conv2d_forward_impl<double>(x, w, geometry);
}

void conv2d_backward(const NdArray& x, const NdArray& w, ConvGeometry geometry, const NdArray& dout, NdArray* dx,
                     NdArray* dw) {
    if (compute_precision() == Precision::f32) {
        conv2d_backward_impl<float>(x, w, geometry, dout, dx, dw);
    } else {
        conv2d_backward_impl<double>(x, w, geometry, dout, dx, dw);
    }
}

NdArray conv2d_input_grad(const Shape& x_shape, const NdArray& w, ConvGeometry geometry, const NdArray& dout) {
    const std::size_t k = w.extent(2);
    if (geometry.stride == 1 && geometry.padding == Padding::zeros && geometry.pad < k) {
        return compute_precision() == Precision::f32 ? conv2d_gather_input_grad<float>(w, geometry, dout)
                                                     : conv2d_gather_input_grad<double>(w, geometry, dout);
    }
    NdArray dx(x_shape);
    const NdArray x_dummy(x_shape);
    conv2d_backward(x_dummy, w, geometry, dout, &dx, nullptr);
    return dx;
}

NdArray conv_transpose2d_forward(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad) {
    require_rank4(x, "conv_transpose2d input");
    require_rank4(w, "conv_transpose2d weight");
    if (w.extent(0) != x.extent(1) || w.extent(2) != w.extent(3)) {
        throw ShapeError("conv_transpose2d: weight " + to_string(w.shape()) + " incompatible with input " +
                         to_string(x.shape()));
    }
    if (stride == 0) throw DomainError("conv_transpose2d: stride must be positive");
    if ((x.extent(2) - 1) * stride + w.extent(2) <= 2 * pad || (x.extent(3) - 1) * stride + w.extent(2) <= 2 * pad) {
        throw ShapeError("conv_transpose2d: padding consumes the whole output");
    }
    return compute_precision() == Precision::f32 ? conv_transpose2d_forward_impl<float>(x, w, stride, pad)
                                                 : conv_transpose2d_forward_impl<double>(x, w, stride, pad);
}

void conv_transpose2d_backward(const NdArray& x, const NdArray& w, std::size_t stride, std::size_t pad,
                               const NdArray& dout, NdArray* dx, NdArray* dw) {
    if (compute_precision() == Precision::f32) {
        conv_transpose2d_backward_impl<float>(x, w, stride, pad, dout, dx, dw);
    } else {
        conv_transpose2d_backward_impl<double>(x, w, stride, pad, dout, dx, dw);
    }
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate) {
    if (compute_precision() == Precision::f32) {
        gemm_impl<float>(trans_a, trans_b, m, n, k, a, b, c, accumulate);
    } else {
        gemm_impl<double>(trans_a, trans_b, m, n, k, a, b, c, accumulate);
    }
}

}  // namespace styldiff::kernels
