#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// under test except the Tensor container itself.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "scnn/tensor.hpp"

namespace oracle {

inline scnn::Tensor random_tensor(scnn::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    scnn::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.data()) v = u(rng);
    return t;
}

inline scnn::Tensor naive_matmul(const scnn::Tensor& a, const scnn::Tensor& b) {
    const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    scnn::Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t p = 0; p < k; ++p) s += a.data()[i * k + p] * b.data()[p * n + j];
            out.data()[i * n + j] = s;
        }
    return out;
}

inline std::vector<double> naive_conv(const scnn::Tensor& in, const scnn::Tensor& ker, double bias) {
    const auto n = in.shape()[0], d = in.shape()[1], h = ker.shape()[0];
    std::vector<double> out;
    for (std::size_t i = 0; i + h <= n; ++i) {
        double s = bias;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < d; ++c) s += in.data()[(i + r) * d + c] * ker.data()[r * d + c];
        out.push_back(s);
    }
    return out;
}

/// Central differences of `loss` w.r.t. every entry of `param`.
inline scnn::Tensor finite_difference(const std::function<double()>& loss, scnn::Tensor& param, double step = 1e-5) {
    scnn::Tensor g(param.shape());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double orig = param[i];
        param[i] = orig + step;
        const double up = loss();
        param[i] = orig - step;
        const double down = loss();
        param[i] = orig;
        g[i] = (up - down) / (2 * step);
    }
    return g;
}

/// |a - n| / max(|a|, |n|); entries where both are below `floor` count as agreeing.
inline double max_relative_error(const scnn::Tensor& analytic, const scnn::Tensor& numeric, double floor = 1e-8) {
    double worst = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], n = numeric[i];
        const double scale = std::max(std::abs(a), std::abs(n));
        if (scale < floor) continue;
        worst = std::max(worst, std::abs(a - n) / scale);
    }
    return worst;
}

} // namespace oracle
