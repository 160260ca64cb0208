// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/ndarray.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "styldiff/error.hpp"

namespace styldiff {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

NdArray::NdArray() : shape_{0} {}

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
    if (!std::isfinite(fill)) throw NonFiniteError("NdArray: non-finite fill value");
}

NdArray::NdArray(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (numel(shape_) != data_.size()) {
        throw ShapeError("NdArray: shape " + to_string(shape_) + " holds " + std::to_string(numel(shape_)) +
                         " values, got " + std::to_string(data_.size()));
    }
    require_finite("NdArray");
}

NdArray NdArray::scalar(double value) { return NdArray(Shape{}, value); }

NdArray NdArray::uninitialized(Shape shape) {
    NdArray out;
    out.data_.resize(numel(shape));
    out.shape_ = std::move(shape);
    return out;
}

std::size_t NdArray::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("extent: axis out of range for " + to_string(shape_));
    return shape_[axis];
}

double NdArray::item() const {
    if (data_.size() != 1) throw ShapeError("item: array of shape " + to_string(shape_) + " is not a scalar");
    return data_[0];
}

NdArray NdArray::reshape(Shape shape) const {
    if (numel(shape) != data_.size()) {
        throw ShapeError("reshape: " + to_string(shape_) + " -> " + to_string(shape));
    }
    NdArray out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

bool NdArray::all_finite() const noexcept {
    // Branch-free so the scan vectorises: a value is non-finite exactly when
    // its exponent bits are all set.
    constexpr std::uint64_t exponent = 0x7ff0000000000000ULL;
    std::uint64_t bad = 0;
    for (double v : data_) bad |= static_cast<std::uint64_t>((std::bit_cast<std::uint64_t>(v) & exponent) == exponent);
    return bad == 0;
}

void NdArray::require_finite(std::string_view producer) const {
    if (!all_finite()) throw NonFiniteError(std::string(producer) + ": produced a non-finite value");
}

bool same_shape(const NdArray& a, const NdArray& b) noexcept { return a.shape() == b.shape(); }

void require_same_shape(const NdArray& a, const NdArray& b, std::string_view op) {
    if (!same_shape(a, b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
}

bool bit_equal(const NdArray& a, const NdArray& b) noexcept {
    return a.shape() == b.shape() && std::memcmp(a.raw(), b.raw(), a.size() * sizeof(double)) == 0;
}

namespace {

template <typename F>
NdArray zip(const NdArray& a, const NdArray& b, std::string_view op, F f) {
    require_same_shape(a, b, op);
    NdArray out = NdArray::uninitialized(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    out.require_finite(op);
    return out;
}

template <typename F>
NdArray map(const NdArray& a, F f) {
    NdArray out = NdArray::uninitialized(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
    out.require_finite("map");
    return out;
}

}  // namespace

NdArray operator+(const NdArray& a, const NdArray& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}
NdArray operator-(const NdArray& a, const NdArray& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
NdArray operator*(const NdArray& a, const NdArray& b) {
    return zip(a, b, "mul", [](double x, double y) { return x * y; });
}
NdArray operator*(double s, const NdArray& a) {
    return map(a, [s](double x) { return s * x; });
}
NdArray operator*(const NdArray& a, double s) { return s * a; }

NdArray axpby(double a, const NdArray& x, double b, const NdArray& y) {
    return zip(x, y, "axpby", [a, b](double u, double v) { return a * u + b * v; });
}

NdArray clamp(const NdArray& a, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("clamp: lo > hi");
    return map(a, [lo, hi](double x) { return std::clamp(x, lo, hi); });
}

double sum(const NdArray& a) { return std::accumulate(a.data().begin(), a.data().end(), 0.0); }

double mean(const NdArray& a) {
    if (a.empty()) throw ShapeError("mean: empty array");
    return sum(a) / static_cast<double>(a.size());
}

double max_abs(const NdArray& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double l2_norm(const NdArray& a) { return std::sqrt(dot(a, a)); }

double dot(const NdArray& a, const NdArray& b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double cosine(const NdArray& a, const NdArray& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine: zero-norm vector");
    return dot(a, b) / (na * nb);
}

NdArray slice_leading(const NdArray& a, std::size_t index) {
    if (a.rank() == 0 || index >= a.extent(0)) throw ShapeError("slice_leading: index out of range");
    Shape shape(a.shape().begin() + 1, a.shape().end());
    const std::size_t stride = numel(shape);
    std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(index * stride),
                            a.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * stride));
    return NdArray(std::move(shape), std::move(out));
}

NdArray stack(std::span<const NdArray> items) {
    if (items.empty()) throw ShapeError("stack: no items");
    Shape shape = items[0].shape();
    std::vector<double> out;
    out.reserve(items.size() * items[0].size());
    for (const auto& item : items) {
        require_same_shape(items[0], item, "stack");
        out.insert(out.end(), item.data().begin(), item.data().end());
    }
    shape.insert(shape.begin(), items.size());
    return NdArray(std::move(shape), std::move(out));
}

}  // namespace styldiff
