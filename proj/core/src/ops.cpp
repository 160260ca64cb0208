// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/ops.hpp"

#include <cmath>

#include "kernels.hpp"
#include "styldiff/error.hpp"

namespace styldiff {
namespace {

Tape& common_tape(const Var& a, const Var& b) {
    if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) throw Error("ops: operands live on different tapes");
    return a.tape();
}

enum class Broadcast { none, left_scalar, right_scalar };

Broadcast broadcast_mode(const NdArray& x, const NdArray& y, const char* op) {
    if (x.shape() == y.shape()) return Broadcast::none;
    if (x.size() == 1) return Broadcast::left_scalar;
    if (y.size() == 1) return Broadcast::right_scalar;
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
}

// Binary elementwise op with scalar broadcast. `dfx(x, y)` and `dfy(x, y)`
// are the partial derivatives of f.
template <typename F, typename Dx, typename Dy>
Var binary(const Var& a, const Var& b, const char* op, F f, Dx dfx, Dy dfy) {
    Tape& tape = common_tape(a, b);
    const NdArray& x = a.value();
    const NdArray& y = b.value();
    const Broadcast mode = broadcast_mode(x, y, op);
    const Shape& shape = mode == Broadcast::left_scalar ? y.shape() : x.shape();
    const std::size_t n = numel(shape);
    const bool xs = mode == Broadcast::left_scalar, ys = mode == Broadcast::right_scalar;
    NdArray out = NdArray::uninitialized(shape);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(x[xs ? 0 : i], y[ys ? 0 : i]);
    const std::size_t ia = a.index(), ib = b.index();
    return tape.record(std::move(out), {a, b}, op, [=](Tape& t, const NdArray& g) {
        const NdArray& xv = t.value(ia);
        const NdArray& yv = t.value(ib);
        if (t.requires_grad(ia)) {
            NdArray& gx = t.grad_buffer(ia);
            for (std::size_t i = 0; i < n; ++i) gx[xs ? 0 : i] += g[i] * dfx(xv[xs ? 0 : i], yv[ys ? 0 : i]);
        }
        if (t.requires_grad(ib)) {
            NdArray& gy = t.grad_buffer(ib);
            for (std::size_t i = 0; i < n; ++i) gy[ys ? 0 : i] += g[i] * dfy(xv[xs ? 0 : i], yv[ys ? 0 : i]);
        }
    });
}

// Unary elementwise op; `df(x, y)` is the derivative given input and output.
template <typename F, typename D>
Var unary(const Var& a, const char* op, F f, D df) {
    const NdArray& x = a.value();
    NdArray result = NdArray::uninitialized(x.shape());
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = f(x[i]);
    const std::size_t ia = a.index();
    const std::size_t self = a.tape().size();
    return a.tape().record(std::move(result), {a}, op, [=](Tape& t, const NdArray& g) {
        const NdArray& xv = t.value(ia);
        const NdArray& yv = t.value(self);
        NdArray& gx = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
    });
}

void require_rank(const NdArray& a, std::size_t rank, const char* op) {
    if (a.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + to_string(a.shape()));
    }
}

struct ChannelLayout {
    std::size_t batch, channels, inner;
    bool shared;
};

ChannelLayout channel_layout(const NdArray& x, const NdArray& c, const char* op) {
    if (x.rank() < 2) throw ShapeError(std::string(op) + ": input must have rank >= 2");
    ChannelLayout l{x.extent(0), x.extent(1), x.size() / (x.extent(0) * x.extent(1)), false};
    if (c.shape() == Shape{l.channels}) {
        l.shared = true;
    } else if (c.shape() != Shape{l.batch, l.channels}) {
        throw ShapeError(std::string(op) + ": channel operand " + to_string(c.shape()) + " does not fit " +
                         to_string(x.shape()));
    }
    return l;
}

}  // namespace

Var add(const Var& a, const Var& b) {
    if (a.shape() != b.shape()) {
        return binary(
            a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
            [](double, double) { return 1.0; });
    }
    Tape& tape = common_tape(a, b);
    const std::size_t ia = a.index(), ib = b.index();
    return tape.record(a.value() + b.value(), {a, b}, "add", [=](Tape& t, const NdArray& g) {
        if (t.requires_grad(ia)) t.accumulate_grad(ia, NdArray(g));
        if (t.requires_grad(ib)) t.accumulate_grad(ib, NdArray(g));
    });
}

Var sub(const Var& a, const Var& b) {
    if (a.shape() != b.shape()) {
        return binary(
            a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
            [](double, double) { return -1.0; });
    }
    Tape& tape = common_tape(a, b);
    const std::size_t ia = a.index(), ib = b.index();
    return tape.record(a.value() - b.value(), {a, b}, "sub", [=](Tape& t, const NdArray& g) {
        if (t.requires_grad(ia)) t.accumulate_grad(ia, NdArray(g));
        if (t.requires_grad(ib)) t.accumulate_grad(ib, -1.0 * g);
    });
}

Var mul(const Var& a, const Var& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var scale(const Var& a, double s) {
    return unary(
        a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
    return unary(
        a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var sum(const Var& a) {
    const NdArray& x = a.value();
    const std::size_t ia = a.index();
    return a.tape().record(NdArray::scalar(styldiff::sum(x)), {a}, "sum", [ia](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ia);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
    });
}

Var mean(const Var& a) {
    const NdArray& x = a.value();
    if (x.empty()) throw ShapeError("mean: empty array");
    const std::size_t ia = a.index();
    const double inv = 1.0 / static_cast<double>(x.size());
    return a.tape().record(NdArray::scalar(styldiff::sum(x) * inv), {a}, "mean", [ia, inv](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ia);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * inv;
    });
}

Var abs(const Var& a) {
    return unary(
        a, "abs", [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sqrt(const Var& a) {
    for (double v : a.value().data()) {
        if (v < 0.0) throw DomainError("sqrt: negative input");
    }
    return unary(
        a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var square(const Var& a) {
    return unary(
        a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var leaky_relu(const Var& a, double slope) {
    // Written as selects rather than branches: the sign pattern of
    // activations is unpredictable and a branchy loop is several times slower.
    return unary(
        a, "leaky_relu", [slope](double x) { return x * (x > 0.0 ? 1.0 : slope); },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var clamp(const Var& a, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("clamp: lo > hi");
    return unary(
        a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var matmul(const Var& a, const Var& b) {
    Tape& tape = common_tape(a, b);
    const NdArray& x = a.value();
    const NdArray& y = b.value();
    require_rank(x, 2, "matmul");
    require_rank(y, 2, "matmul");
    const std::size_t m = x.extent(0), k = x.extent(1), n = y.extent(1);
    if (y.extent(0) != k) throw ShapeError("matmul: " + to_string(x.shape()) + " x " + to_string(y.shape()));
    NdArray out({m, n});
    kernels::gemm(false, false, m, n, k, x.raw(), y.raw(), out.raw(), false);
    const std::size_t ia = a.index(), ib = b.index();
    const Precision precision = compute_precision();
    return tape.record(std::move(out), {a, b}, "matmul", [=](Tape& t, const NdArray& g) {
        PrecisionScope scope(precision);
        if (t.requires_grad(ia)) kernels::gemm(false, true, m, k, n, g.raw(), t.value(ib).raw(), t.grad_buffer(ia).raw(), true);
        if (t.requires_grad(ib)) kernels::gemm(true, false, k, n, m, t.value(ia).raw(), g.raw(), t.grad_buffer(ib).raw(), true);
    });
}

Var transpose(const Var& a) {
    const NdArray& x = a.value();
    require_rank(x, 2, "transpose");
    const std::size_t r = x.extent(0), c = x.extent(1);
    NdArray out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
    const std::size_t ia = a.index();
    return a.tape().record(std::move(out), {a}, "transpose", [=](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ia);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
}

Var reshape(const Var& a, Shape shape) {
    const std::size_t ia = a.index();
    return a.tape().record(a.value().reshape(std::move(shape)), {a}, "reshape", [ia](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var cosine_similarity(const Var& a, const Var& b) {
    Tape& tape = common_tape(a, b);
    const NdArray& x = a.value();
    const NdArray& y = b.value();
    if (x.size() != y.size()) throw ShapeError("cosine_similarity: length mismatch");
    const double nx = l2_norm(x), ny = l2_norm(y);
    if (nx == 0.0 || ny == 0.0) throw DomainError("cosine_similarity: zero-norm operand");
    const double c = dot(x, y) / (nx * ny);
    const std::size_t ia = a.index(), ib = b.index();
    return tape.record(NdArray::scalar(c), {a, b}, "cosine_similarity", [=](Tape& t, const NdArray& g) {
        const NdArray& xv = t.value(ia);
        const NdArray& yv = t.value(ib);
        if (t.requires_grad(ia)) {
            NdArray& gx = t.grad_buffer(ia);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * (yv[i] / (nx * ny) - c * xv[i] / (nx * nx));
        }
        if (t.requires_grad(ib)) {
            NdArray& gy = t.grad_buffer(ib);
            for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g[0] * (xv[i] / (nx * ny) - c * yv[i] / (ny * ny));
        }
    });
}

Var conv2d(const Var& x, const Var& w, ConvGeometry geometry) {
    Tape& tape = common_tape(x, w);
    NdArray out = kernels::conv2d_forward(x.value(), w.value(), geometry);
    const std::size_t ix = x.index(), iw = w.index();
    const Precision precision = compute_precision();
    return tape.record(std::move(out), {x, w}, "conv2d", [=](Tape& t, const NdArray& g) {
        PrecisionScope scope(precision);
        if (t.requires_grad(iw)) kernels::conv2d_backward(t.value(ix), t.value(iw), geometry, g, nullptr, &t.grad_buffer(iw));
        if (t.requires_grad(ix)) t.accumulate_grad(ix, kernels::conv2d_input_grad(t.value(ix).shape(), t.value(iw), geometry, g));
    });
}

Var conv_transpose2d(const Var& x, const Var& w, std::size_t stride, std::size_t pad) {
    Tape& tape = common_tape(x, w);
    NdArray out = kernels::conv_transpose2d_forward(x.value(), w.value(), stride, pad);
    const std::size_t ix = x.index(), iw = w.index();
    const Precision precision = compute_precision();
    return tape.record(std::move(out), {x, w}, "conv_transpose2d", [=](Tape& t, const NdArray& g) {
        PrecisionScope scope(precision);
        kernels::conv_transpose2d_backward(t.value(ix), t.value(iw), stride, pad, g,
                                           t.requires_grad(ix) ? &t.grad_buffer(ix) : nullptr,
                                           t.requires_grad(iw) ? &t.grad_buffer(iw) : nullptr);
    });
}

namespace {

// Adds bias b [C] to y [N, C, ...] in place.
void add_bias(NdArray& y, const NdArray& b, const char* op) {
    if (y.rank() < 2 || b.shape() != Shape{y.extent(1)}) {
        throw ShapeError(std::string(op) + ": bias " + to_string(b.shape()) + " does not fit " + to_string(y.shape()));
    }
    const std::size_t batch = y.extent(0), channels = y.extent(1), inner = y.size() / (batch * channels);
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t c = 0; c < channels; ++c) {
            double* p = y.raw() + (n * channels + c) * inner;
            for (std::size_t s = 0; s < inner; ++s) p[s] += b[c];
        }
}

// d bias = sum of g over every axis but 1.
void accumulate_bias_grad(const NdArray& g, NdArray& gb) {
    const std::size_t batch = g.extent(0), channels = g.extent(1), inner = g.size() / (batch * channels);
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t c = 0; c < channels; ++c) {
            const double* p = g.raw() + (n * channels + c) * inner;
            double acc = 0.0;
            for (std::size_t s = 0; s < inner; ++s) acc += p[s];
            gb[c] += acc;
        }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, ConvGeometry geometry) {
    Tape& tape = common_tape(x, w);
    common_tape(x, b);
    NdArray out = kernels::conv2d_forward(x.value(), w.value(), geometry);
    add_bias(out, b.value(), "conv2d");
    const std::size_t ix = x.index(), iw = w.index(), ib = b.index();
    const Precision precision = compute_precision();
    return tape.record(std::move(out), {x, w, b}, "conv2d", [=](Tape& t, const NdArray& g) {
        PrecisionScope scope(precision);
        if (t.requires_grad(iw)) kernels::conv2d_backward(t.value(ix), t.value(iw), geometry, g, nullptr, &t.grad_buffer(iw));
        if (t.requires_grad(ix)) t.accumulate_grad(ix, kernels::conv2d_input_grad(t.value(ix).shape(), t.value(iw), geometry, g));
        if (t.requires_grad(ib)) accumulate_bias_grad(g, t.grad_buffer(ib));
    });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, std::size_t stride, std::size_t pad) {
    Tape& tape = common_tape(x, w);
    common_tape(x, b);
    NdArray out = kernels::conv_transpose2d_forward(x.value(), w.value(), stride, pad);
    add_bias(out, b.value(), "conv_transpose2d");
    const std::size_t ix = x.index(), iw = w.index(), ib = b.index();
    const Precision precision = compute_precision();
    return tape.record(std::move(out), {x, w, b}, "conv_transpose2d", [=](Tape& t, const NdArray& g) {
        PrecisionScope scope(precision);
        const bool want_x = t.requires_grad(ix), want_w = t.requires_grad(iw);
        if (want_x || want_w) {
            kernels::conv_transpose2d_backward(t.value(ix), t.value(iw), stride, pad, g,
                                               want_x ? &t.grad_buffer(ix) : nullptr,
                                               want_w ? &t.grad_buffer(iw) : nullptr);
        }
        if (t.requires_grad(ib)) accumulate_bias_grad(g, t.grad_buffer(ib));
    });
}

Var channel_affine(const Var& x, const Var& scale, const Var& shift, double slope) {
    Tape& tape = common_tape(x, scale);
    common_tape(x, shift);
    if (!(slope >= 0.0 && slope <= 1.0)) throw DomainError("channel_affine: slope must lie in [0, 1]");
    const NdArray& xv = x.value();
    const ChannelLayout l = channel_layout(xv, scale.value(), "channel_affine");
    const ChannelLayout ls = channel_layout(xv, shift.value(), "channel_affine");
    const NdArray& sv = scale.value();
    const NdArray& bv = shift.value();
    NdArray out = NdArray::uninitialized(xv.shape());
    for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t ch = 0; ch < l.channels; ++ch) {
            const double s = sv[l.shared ? ch : n * l.channels + ch];
            const double b = bv[ls.shared ? ch : n * l.channels + ch];
            const std::size_t base = (n * l.channels + ch) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) {
                const double z = xv[base + i] * s + b;
                out[base + i] = z * (z > 0.0 ? 1.0 : slope);
            }
        }
    const std::size_t ix = x.index(), is = scale.index(), ib = shift.index(), self = tape.size();
    return tape.record(std::move(out), {x, scale, shift}, "channel_affine",
                       [=](Tape& t, const NdArray& g) {
                           const NdArray& xs = t.value(ix);
                           const NdArray& ss = t.value(is);
                           const NdArray& ys = t.value(self);
                           const bool want_x = t.requires_grad(ix), want_s = t.requires_grad(is),
                                      want_b = t.requires_grad(ib);
                           for (std::size_t n = 0; n < l.batch; ++n)
                               for (std::size_t ch = 0; ch < l.channels; ++ch) {
                                   const std::size_t si = l.shared ? ch : n * l.channels + ch;
                                   const std::size_t bi = ls.shared ? ch : n * l.channels + ch;
                                   const std::size_t base = (n * l.channels + ch) * l.inner;
                                   const double s = ss[si];
                                   double acc_s = 0.0, acc_b = 0.0;
                                   double* gx = want_x ? t.grad_buffer(ix).raw() + base : nullptr;
                                   // y > 0 exactly when the pre-activation is positive.
                                   for (std::size_t i = 0; i < l.inner; ++i) {
                                       const double dz = g[base + i] * (ys[base + i] > 0.0 ? 1.0 : slope);
                                       if (gx) gx[i] += dz * s;
                                       acc_s += dz * xs[base + i];
                                       acc_b += dz;
                                   }
                                   if (want_s) t.grad_buffer(is)[si] += acc_s;
                                   if (want_b) t.grad_buffer(ib)[bi] += acc_b;
                               }
                       });
}

Var channel_add(const Var& x, const Var& c) {
    Tape& tape = common_tape(x, c);
    const NdArray& xv = x.value();
    const ChannelLayout l = channel_layout(xv, c.value(), "channel_add");
    const NdArray& cv = c.value();
    NdArray out = xv;
    for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t ch = 0; ch < l.channels; ++ch) {
            const double v = cv[l.shared ? ch : n * l.channels + ch];
            double* p = out.raw() + (n * l.channels + ch) * l.inner;
            for (std::size_t s = 0; s < l.inner; ++s) p[s] += v;
        }
    const std::size_t ix = x.index(), ic = c.index();
    return tape.record(std::move(out), {x, c}, "channel_add", [=](Tape& t, const NdArray& g) {
        if (t.requires_grad(ix)) t.accumulate_grad(ix, NdArray(g));
        if (t.requires_grad(ic)) {
            NdArray& gc = t.grad_buffer(ic);
            for (std::size_t n = 0; n < l.batch; ++n)
                for (std::size_t ch = 0; ch < l.channels; ++ch) {
                    const double* p = g.raw() + (n * l.channels + ch) * l.inner;
                    double acc = 0.0;
                    for (std::size_t s = 0; s < l.inner; ++s) acc += p[s];
                    gc[l.shared ? ch : n * l.channels + ch] += acc;
                }
        }
    });
}

Var channel_mul(const Var& x, const Var& c) {
    Tape& tape = common_tape(x, c);
    const NdArray& xv = x.value();
    const ChannelLayout l = channel_layout(xv, c.value(), "channel_mul");
    const NdArray& cv = c.value();
    NdArray out = xv;
    for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t ch = 0; ch < l.channels; ++ch) {
            const double v = cv[l.shared ? ch : n * l.channels + ch];
            double* p = out.raw() + (n * l.channels + ch) * l.inner;
            for (std::size_t s = 0; s < l.inner; ++s) p[s] *= v;
        }
    const std::size_t ix = x.index(), ic = c.index();
    return tape.record(std::move(out), {x, c}, "channel_mul", [=](Tape& t, const NdArray& g) {
        const NdArray& xs = t.value(ix);
        const NdArray& cs = t.value(ic);
        const bool want_x = t.requires_grad(ix), want_c = t.requires_grad(ic);
        for (std::size_t n = 0; n < l.batch; ++n)
            for (std::size_t ch = 0; ch < l.channels; ++ch) {
                const std::size_t ci = l.shared ? ch : n * l.channels + ch;
                const std::size_t base = (n * l.channels + ch) * l.inner;
                if (want_x) {
                    NdArray& gx = t.grad_buffer(ix);
                    for (std::size_t s = 0; s < l.inner; ++s) gx[base + s] += g[base + s] * cs[ci];
                }
                if (want_c) {
                    double acc = 0.0;
                    for (std::size_t s = 0; s < l.inner; ++s) acc += g[base + s] * xs[base + s];
                    t.grad_buffer(ic)[ci] += acc;
                }
            }
    });
}

Var spatial_mean(const Var& x) {
    const NdArray& xv = x.value();
    if (xv.rank() < 2) throw ShapeError("spatial_mean: input must have rank >= 2");
    const std::size_t batch = xv.extent(0), channels = xv.extent(1);
    const std::size_t inner = xv.size() / (batch * channels);
    if (inner == 0) throw ShapeError("spatial_mean: empty spatial extent");
    NdArray out({batch, channels});
    for (std::size_t i = 0; i < batch * channels; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < inner; ++s) acc += xv[i * inner + s];
        out[i] = acc / static_cast<double>(inner);
    }
    const std::size_t ix = x.index();
    return x.tape().record(std::move(out), {x}, "spatial_mean", [=](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ix);
        const double inv = 1.0 / static_cast<double>(inner);
        for (std::size_t i = 0; i < batch * channels; ++i)
            for (std::size_t s = 0; s < inner; ++s) gx[i * inner + s] += g[i] * inv;
    });
}

Var concat_channels(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no operands");
    Tape& tape = parts[0].tape();
    const std::size_t batch = parts[0].value().extent(0);
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        common_tape(parts[0], p);
        require_rank(p.value(), 2, "concat_channels");
        if (p.value().extent(0) != batch) throw ShapeError("concat_channels: batch mismatch");
        widths.push_back(p.value().extent(1));
        total += widths.back();
    }
    NdArray out({batch, total});
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const NdArray& v = parts[k].value();
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t c = 0; c < widths[k]; ++c) out[n * total + offset + c] = v[n * widths[k] + c];
        offset += widths[k];
    }
    std::vector<std::size_t> indices;
    for (const Var& p : parts) indices.push_back(p.index());
    return tape.record(std::move(out), std::vector<Var>(parts.begin(), parts.end()), "concat_channels",
                       [=](Tape& t, const NdArray& g) {
                           std::size_t off = 0;
                           for (std::size_t k = 0; k < indices.size(); ++k) {
                               if (t.requires_grad(indices[k])) {
                                   NdArray& gp = t.grad_buffer(indices[k]);
                                   for (std::size_t n = 0; n < batch; ++n)
                                       for (std::size_t c = 0; c < widths[k]; ++c)
                                           gp[n * widths[k] + c] += g[n * total + off + c];
                               }
                               off += widths[k];
                           }
                       });
}

Var select_batch(const Var& x, std::size_t index) {
    const NdArray& xv = x.value();
    NdArray slice = slice_leading(xv, index);
    Shape shape = slice.shape();
    shape.insert(shape.begin(), 1);
    const std::size_t stride = slice.size();
    const std::size_t ix = x.index();
    return x.tape().record(slice.reshape(std::move(shape)), {x}, "select_batch", [=](Tape& t, const NdArray& g) {
        NdArray& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < stride; ++i) gx[index * stride + i] += g[i];
    });
}

}  // namespace styldiff
