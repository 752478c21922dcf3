#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scnn/error.hpp"

namespace scnn {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major array of doubles. Every extent is positive.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
        check_shape();
        data_.assign(shape_numel(shape_), fill);
    }

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        if (shape_numel(shape_) != data_.size())
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(shape_));
    }

    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
        std::vector<double> d;
        std::size_t cols = rows.size() ? rows.begin()->size() : 0;
        for (auto& r : rows) {
            if (r.size() != cols) throw DimensionError("ragged matrix literal");
            d.insert(d.end(), r.begin(), r.end());
        }
        return Tensor({rows.size(), cols}, std::move(d));
    }

    static Tensor vector(std::initializer_list<double> v) {
        return Tensor({v.size()}, std::vector<double>(v));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    double item() const {
        if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape_));
        return data_[0];
    }

    Tensor reshaped(Shape s) const& { return Tensor(std::move(s), data_); }
    Tensor reshaped(Shape s) && { return Tensor(std::move(s), std::move(data_)); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void check_shape() const {
        if (shape_.empty()) throw DimensionError("tensor shape must have at least one extent");
        for (auto e : shape_)
            if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape_));
    }

    Shape shape_;
    std::vector<double> data_;
};

inline void require_finite(const Tensor& t, const char* where) {
    if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + where);
}

namespace detail {

// Four independent accumulators; keeps the summation order fixed.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace detail

/// Plain matrix product [m x k] * [k x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            detail::axpy(pa[i * k + p], pb + p * n, po + i * n, n);
        }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose needs a matrix, got " + shape_str(a.shape()));
    Tensor out({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

/// Single-kernel valid convolution along the sequence axis: input [N x d],
/// kernel [h x d] -> [N - h + 1].
inline Tensor conv_valid(const Tensor& input, const Tensor& kernel, double bias) {
    if (input.rank() != 2 || kernel.rank() != 2 || input.dim(1) != kernel.dim(1))
        throw DimensionError("conv_valid shape mismatch: input " + shape_str(input.shape()) + ", kernel " +
                             shape_str(kernel.shape()));
    const std::size_t n = input.dim(0), h = kernel.dim(0), d = input.dim(1);
    if (h > n)
        throw InvalidInput("conv_valid window " + std::to_string(h) + " exceeds sequence length " +
                           std::to_string(n));
    Tensor out({n - h + 1});
    for (std::size_t i = 0; i + h <= n; ++i)
        out[i] = detail::dot(input.data().data() + i * d, kernel.data().data(), h * d) + bias;
    return out;
}

/// Index of the maximum; lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
    if (v.empty()) throw InvalidInput("argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline double max_over_time(const Tensor& c) { return c.data()[argmax(c.data())]; }

struct Moments {
    double mean = 0;
    double variance = 0;
};

/// Population mean and variance; two-pass for accuracy.
inline Moments moments(std::span<const double> v) {
    if (v.empty()) throw InvalidInput("moments of empty range");
    double s = 0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, ss / static_cast<double>(v.size())};
}

} // namespace scnn
