#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

/// SELU constants. Defaults are the full-precision fixed-point values; they
/// round to alpha = 1.6733, lambda = 1.0507.
struct SeluConstants {
    double alpha = 1.6732632423543772;
    double lambda = 1.0507009873554805;

    /// Negative saturation value, the target of alpha dropout.
    double saturation() const noexcept { return -lambda * alpha; }
};

enum class Activation { elu, selu, relu };
enum class Init { lecun_normal, glorot_uniform, zeros };
enum class DropoutKind { standard, alpha };

struct DropoutSpec {
    DropoutKind kind = DropoutKind::alpha;
    double rate = 0.5; // drop probability

    void validate() const {
        if (!(rate >= 0.0 && rate < 1.0))
            throw InvalidInput("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
};

// ---- activations ----------------------------------------------------------

inline double elu(double x, double alpha = 1.0) { return x > 0 ? x : alpha * std::exp(x) - alpha; }
inline double elu_grad(double x, double alpha = 1.0) { return x > 0 ? 1.0 : alpha * std::exp(x); }

// Written as lambda * elu so the two activations are related exactly.
inline double selu(double x, const SeluConstants& c = {}) { return c.lambda * elu(x, c.alpha); }
inline double selu_grad(double x, const SeluConstants& c = {}) { return c.lambda * elu_grad(x, c.alpha); }

inline double relu(double x) { return x > 0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0 ? 1.0 : 0.0; }

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Activation function together with the constants it needs.
struct ActivationFn {
    Activation kind = Activation::elu;
    double elu_alpha = 1.0;
    SeluConstants selu_consts{};

    double operator()(double x) const {
        switch (kind) {
        case Activation::elu: return elu(x, elu_alpha);
        case Activation::selu: return selu(x, selu_consts);
        case Activation::relu: return relu(x);
        }
        return x;
    }
    double grad(double x) const {
        switch (kind) {
        case Activation::elu: return elu_grad(x, elu_alpha);
        case Activation::selu: return selu_grad(x, selu_consts);
        case Activation::relu: return relu_grad(x);
        }
        return 1.0;
    }
};

template <typename F>
Tensor map(const Tensor& x, F&& f) {
    Tensor out(x.shape());
    auto in = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
    return out;
}

inline Tensor selu(const Tensor& x, const SeluConstants& c = {}) {
    return map(x, [&](double v) { return selu(v, c); });
}
inline Tensor elu(const Tensor& x, double alpha = 1.0) {
    if (!(alpha > 0)) throw InvalidInput("elu alpha must be positive");
    return map(x, [&](double v) { return elu(v, alpha); });
}
inline Tensor relu(const Tensor& x) {
    return map(x, [](double v) { return relu(v); });
}

/// Softmax over a flat vector, max-subtracted.
inline void softmax_inplace(std::span<double> v) {
    double m = v[argmax(v)];
    double s = 0;
    for (double& x : v) {
        x = std::exp(x - m);
        s += x;
    }
    for (double& x : v) x /= s;
}

/// Softmax along the last axis.
inline Tensor softmax(const Tensor& x) {
    Tensor out = x;
    const std::size_t k = x.rank() ? x.shape().back() : 1;
    for (std::size_t off = 0; off < out.size(); off += k) softmax_inplace(out.data().subspan(off, k));
    return out;
}

// ---- initializers ---------------------------------------------------------

inline double glorot_stddev(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}
inline double lecun_stddev(std::size_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

/// Fill a tensor of arbitrary shape from the given family using explicit fans.
inline Tensor init_tensor(Shape shape, Init init, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor t(std::move(shape));
    switch (init) {
    case Init::lecun_normal: {
        if (fan_in == 0) throw InvalidInput("lecun_normal requires fan_in >= 1");
        std::normal_distribution<double> dist(0.0, lecun_stddev(fan_in));
        for (double& v : t.data()) v = dist(rng);
        break;
    }
    case Init::glorot_uniform: {
        if (fan_in == 0 || fan_out == 0) throw InvalidInput("glorot_uniform requires fan_in, fan_out >= 1");
        // Uniform on [-b, b] has stddev b / sqrt(3).
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : t.data()) v = dist(rng);
        break;
    }
    case Init::zeros: break;
    }
    return t;
}

inline Tensor glorot_uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) throw InvalidInput("glorot_uniform requires fan_in, fan_out >= 1");
    return init_tensor({fan_in, fan_out}, Init::glorot_uniform, fan_in, fan_out, rng);
}

inline Tensor lecun_normal_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) throw InvalidInput("lecun_normal requires fan_in, fan_out >= 1");
    return init_tensor({fan_in, fan_out}, Init::lecun_normal, fan_in, fan_out, rng);
}

// ---- dropout --------------------------------------------------------------

/// Per-element dropout decision plus the affine map applied afterwards:
/// kept elements become `scale * x + shift`, dropped ones become `dropped`.
struct DropoutMask {
    std::vector<std::uint8_t> keep;
    double scale = 1.0;
    double shift = 0.0;
    double dropped = 0.0;

    double apply(double x, std::size_t i) const { return keep[i] ? scale * x + shift : dropped; }
    double grad(std::size_t i) const { return keep[i] ? scale : 0.0; }
};

/// Affine correction (a, b) for alpha dropout with keep probability q.
struct AlphaAffine {
    double a = 1.0;
    double b = 0.0;
};

inline AlphaAffine alpha_dropout_affine(double rate, const SeluConstants& c = {}) {
    const double q = 1.0 - rate;
    const double ap = c.saturation();
    const double a = 1.0 / std::sqrt(q + ap * ap * q * (1.0 - q));
    return {a, -a * (1.0 - q) * ap};
}

inline DropoutMask make_dropout_mask(const DropoutSpec& spec, std::size_t n, Rng& rng,
                                     const SeluConstants& c = {}) {
    spec.validate();
    DropoutMask m;
    m.keep.assign(n, 1);
    if (spec.rate > 0) {
        std::bernoulli_distribution drop(spec.rate);
        for (auto& k : m.keep) k = drop(rng) ? 0 : 1;
    }
    if (spec.kind == DropoutKind::standard) {
        m.scale = 1.0 / (1.0 - spec.rate);
        m.shift = 0.0;
        m.dropped = 0.0;
    } else {
        const auto ab = alpha_dropout_affine(spec.rate, c);
        m.scale = ab.a;
        m.shift = ab.b;
        m.dropped = ab.a * c.saturation() + ab.b;
    }
    return m;
}

inline Tensor apply_mask(const Tensor& x, const DropoutMask& m) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = m.apply(x[i], i);
    return out;
}

inline Tensor standard_dropout(const Tensor& x, const DropoutSpec& spec, bool train, Rng& rng) {
    if (spec.kind != DropoutKind::standard) throw ContractError("standard_dropout called with alpha spec");
    spec.validate();
    if (!train || spec.rate == 0.0) return x;
    return apply_mask(x, make_dropout_mask(spec, x.size(), rng));
}

inline Tensor alpha_dropout(const Tensor& x, const DropoutSpec& spec, const SeluConstants& c, bool train, Rng& rng) {
    if (spec.kind != DropoutKind::alpha) throw ContractError("alpha_dropout called with standard spec");
    spec.validate();
    if (!train || spec.rate == 0.0) return x;
    return apply_mask(x, make_dropout_mask(spec, x.size(), rng, c));
}

// ---- names ----------------------------------------------------------------

inline const char* to_string(Activation a) {
    switch (a) {
    case Activation::elu: return "elu";
    case Activation::selu: return "selu";
    case Activation::relu: return "relu";
    }
    return "?";
}
inline const char* to_string(Init i) {
    switch (i) {
    case Init::lecun_normal: return "lecun_normal";
    case Init::glorot_uniform: return "glorot_uniform";
    case Init::zeros: return "zeros";
    }
    return "?";
}
inline const char* to_string(DropoutKind k) { return k == DropoutKind::standard ? "standard" : "alpha"; }

inline Activation parse_activation(const std::string& s) {
    if (s == "elu") return Activation::elu;
    if (s == "selu") return Activation::selu;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + s + "' (valid: elu, selu, relu)");
}
inline Init parse_init(const std::string& s) {
    if (s == "lecun_normal") return Init::lecun_normal;
    if (s == "glorot_uniform") return Init::glorot_uniform;
    if (s == "zeros") return Init::zeros;
    throw ConfigError("unknown initializer '" + s + "' (valid: lecun_normal, glorot_uniform, zeros)");
}
inline DropoutKind parse_dropout_kind(const std::string& s) {
    if (s == "standard") return DropoutKind::standard;
    if (s == "alpha") return DropoutKind::alpha;
    throw ConfigError("unknown dropout kind '" + s + "' (valid: standard, alpha)");
}

} // namespace scnn
