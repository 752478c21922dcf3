#pragma once

// Empirical probe of activation moments through an untrained fully connected
// stack. Used to check the SELU fixed point and to contrast activation and
// initializer choices on normalized and unnormalized inputs.

#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/layers.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

struct InputDist {
    double sigma = 1.0; // 1.0 is the standard normal

    bool standard() const { return sigma == 1.0; }
    std::string name() const {
        if (standard()) return "standard_normal";
        char buf[64];
        std::snprintf(buf, sizeof buf, "scaled_normal(%g)", sigma);
        return buf;
    }
};

struct ProbeConfig {
    std::size_t depth = 20;
    std::size_t width = 256;
    Activation activation = Activation::selu;
    Init init = Init::lecun_normal;
    std::optional<DropoutSpec> dropout; // applied after every activation, train mode
    InputDist input{};
    std::size_t n_samples = 10000;
    double elu_alpha = 1.0;
    SeluConstants selu{};

    std::string label() const { return std::string(to_string(activation)) + "-" + to_string(init); }

    void validate() const {
        if (depth < 1) throw ConfigError("probe depth must be at least 1");
        if (width < 8) throw ConfigError("probe width must be at least 8");
        if (n_samples < 10000) throw ConfigError("probe needs at least 10000 samples");
        if (!(input.sigma > 0)) throw ConfigError("input sigma must be positive");
        if (dropout) dropout->validate();
    }
};

struct LayerMoments {
    std::size_t layer = 0; // 1-based
    double mean = 0;
    double variance = 0;
    double second_moment = 0;
};

struct MomentReport {
    ProbeConfig config;
    std::string label;
    std::vector<LayerMoments> layers;
};

inline MomentReport propagate(const ProbeConfig& cfg, Rng& rng) {
    cfg.validate();
    const ActivationFn act{cfg.activation, cfg.elu_alpha, cfg.selu};
    Tensor x({cfg.n_samples, cfg.width});
    std::normal_distribution<double> in(0.0, cfg.input.sigma);
    for (double& v : x.data()) v = in(rng);

    MomentReport r;
    r.config = cfg;
    r.label = cfg.label();
    for (std::size_t l = 1; l <= cfg.depth; ++l) {
        const Tensor w = init_tensor({cfg.width, cfg.width}, cfg.init, cfg.width, cfg.width, rng);
        x = map(matmul(x, w), act);
        if (cfg.dropout && cfg.dropout->rate > 0)
            x = apply_mask(x, make_dropout_mask(*cfg.dropout, x.size(), rng, cfg.selu));
        require_finite(x, "moment probe");
        const auto mo = moments(x.data());
        r.layers.push_back({l, mo.mean, mo.variance, mo.variance + mo.mean * mo.mean});
    }
    return r;
}

/// Side-by-side per-layer trajectories; deltas are relative to the first report.
struct MomentComparison {
    std::vector<std::string> labels;
    std::size_t depth = 0;
    // [layer][report]
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> variance;

    double delta_mean(std::size_t layer, std::size_t report) const { return mean[layer][report] - mean[layer][0]; }
    double delta_variance(std::size_t layer, std::size_t report) const {
        return variance[layer][report] - variance[layer][0];
    }
};

inline MomentComparison compare(const std::vector<MomentReport>& reports) {
    if (reports.size() < 2) throw InvalidInput("compare needs at least two reports");
    MomentComparison c;
    c.depth = reports.front().layers.size();
    for (const auto& r : reports) {
        if (r.layers.size() != c.depth) throw InvalidInput("compare: reports have different depths");
        c.labels.push_back(r.label);
    }
    c.mean.assign(c.depth, {});
    c.variance.assign(c.depth, {});
    for (std::size_t l = 0; l < c.depth; ++l)
        for (const auto& r : reports) {
            c.mean[l].push_back(r.layers[l].mean);
            c.variance[l].push_back(r.layers[l].variance);
        }
    return c;
}

namespace detail {
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

inline void write_csv(std::ostream& os, const MomentReport& r) {
    os << "layer,mean,variance\n";
    for (const auto& l : r.layers) os << l.layer << ',' << detail::num(l.mean) << ',' << detail::num(l.variance) << '\n';
}

inline void write_csv(std::ostream& os, const MomentComparison& c) {
    os << "layer";
    for (const auto& l : c.labels) os << ',' << l << "_mean," << l << "_variance";
    for (std::size_t j = 1; j < c.labels.size(); ++j)
        os << ',' << c.labels[j] << "_delta_mean," << c.labels[j] << "_delta_variance";
    os << '\n';
    for (std::size_t l = 0; l < c.depth; ++l) {
        os << l + 1;
        for (std::size_t j = 0; j < c.labels.size(); ++j)
            os << ',' << detail::num(c.mean[l][j]) << ',' << detail::num(c.variance[l][j]);
        for (std::size_t j = 1; j < c.labels.size(); ++j)
            os << ',' << detail::num(c.delta_mean(l, j)) << ',' << detail::num(c.delta_variance(l, j));
        os << '\n';
    }
}

} // namespace scnn
