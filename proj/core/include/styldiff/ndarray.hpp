// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace styldiff {

using Shape = std::vector<std::size_t>;

namespace detail {

// Value-construction without arguments default-initialises, so a sized
// vector of doubles is not zero-filled first.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = DefaultInitAllocator<U>;
    };
    using std::allocator<T>::allocator;
    template <typename U>
    void construct(U* p) noexcept {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

}  // namespace detail

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of 64-bit reals.
///
/// Images are stored channel-planar, `{3, H, W}` for a single image and
/// `{N, 3, H, W}` for a batch. Values are never NaN or infinite; every
/// producing operation checks and throws NonFiniteError instead.
class NdArray {
public:
    NdArray();
    explicit NdArray(Shape shape, double fill = 0.0);
    NdArray(Shape shape, std::vector<double> values);

    static NdArray scalar(double value);
    /// Contents are unspecified; the caller must write every element before
    /// the array is observed.
    static NdArray uninitialized(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const;
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const double* raw() const noexcept { return data_.data(); }
    double* raw() noexcept { return data_.data(); }

    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }

    /// Value of a one-element array.
    double item() const;

    NdArray reshape(Shape shape) const;

    bool all_finite() const noexcept;
    void require_finite(std::string_view producer) const;

private:
    Shape shape_;
    std::vector<double, detail::DefaultInitAllocator<double>> data_;
};

bool same_shape(const NdArray& a, const NdArray& b) noexcept;
void require_same_shape(const NdArray& a, const NdArray& b, std::string_view op);

/// Shape and every bit of every value are identical.
bool bit_equal(const NdArray& a, const NdArray& b) noexcept;

NdArray operator+(const NdArray& a, const NdArray& b);
NdArray operator-(const NdArray& a, const NdArray& b);
NdArray operator*(const NdArray& a, const NdArray& b);
NdArray operator*(double s, const NdArray& a);
NdArray operator*(const NdArray& a, double s);

/// a*x + b*y
NdArray axpby(double a, const NdArray& x, double b, const NdArray& y);
NdArray clamp(const NdArray& a, double lo, double hi);

double sum(const NdArray& a);
double mean(const NdArray& a);
double max_abs(const NdArray& a);
double l2_norm(const NdArray& a);
double dot(const NdArray& a, const NdArray& b);
double cosine(const NdArray& a, const NdArray& b);

/// Element `index` of the leading axis, keeping the remaining axes.
NdArray slice_leading(const NdArray& a, std::size_t index);
NdArray stack(std::span<const NdArray> items);

}  // namespace styldiff
