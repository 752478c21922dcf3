#include <gtest/gtest.h>

#include <sstream>

#include "scnn/moments.hpp"

using namespace scnn;

TEST(Probe, SeluLecunStaysNearFixedPoint) {
    ProbeConfig cfg;
    Rng rng(1);
    const auto r = propagate(cfg, rng);
    ASSERT_EQ(r.layers.size(), 20u);
    for (const auto& l : r.layers) {
        EXPECT_LT(std::abs(l.mean), 0.1) << "layer " << l.layer;
        EXPECT_GE(l.variance, 0.8) << "layer " << l.layer;
        EXPECT_LE(l.variance, 1.2) << "layer " << l.layer;
        EXPECT_NEAR(l.second_moment, l.variance + l.mean * l.mean, 1e-12);
    }
}

TEST(Probe, ZeroWeightsCollapseToZero) {
    ProbeConfig cfg;
    cfg.depth = 3;
    cfg.init = Init::zeros;
    Rng rng(1);
    for (const auto& l : propagate(cfg, rng).layers) {
        EXPECT_EQ(l.mean, 0.0);
        EXPECT_EQ(l.variance, 0.0);
    }
}

TEST(Probe, SeluRecoversFromScaledInputWhileEluDoesNot) {
    ProbeConfig s;
    s.input.sigma = 3.0;
    s.depth = 15;
    ProbeConfig e = s;
    e.activation = Activation::elu;
    Rng r1(4), r2(4);
    const auto rs = propagate(s, r1), re = propagate(e, r2);
    EXPECT_NEAR(rs.layers.back().variance, 1.0, 0.2);
    EXPECT_GT(std::abs(re.layers.back().variance - 1.0), std::abs(rs.layers.back().variance - 1.0));
    EXPECT_EQ(s.input.name(), "scaled_normal(3)");
}

TEST(Probe, AlphaDropoutKeepsMomentsNearFixedPoint) {
    ProbeConfig cfg;
    cfg.depth = 8;
    cfg.dropout = DropoutSpec{DropoutKind::alpha, 0.1};
    Rng rng(2);
    for (const auto& l : propagate(cfg, rng).layers) {
        EXPECT_LT(std::abs(l.mean), 0.1);
        EXPECT_NEAR(l.variance, 1.0, 0.2);
    }
}

TEST(Probe, SameSeedIsBitIdentical) {
    ProbeConfig cfg;
    cfg.depth = 3;
    Rng a(5), b(5);
    const auto ra = propagate(cfg, a), rb = propagate(cfg, b);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(ra.layers[i].mean, rb.layers[i].mean);
        EXPECT_EQ(ra.layers[i].variance, rb.layers[i].variance);
    }
}

TEST(Probe, ValidationRejectsUnderpoweredSettings) {
    ProbeConfig cfg;
    cfg.n_samples = 9999;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.width = 4;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.depth = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Compare, DeltasRelativeToFirstReport) {
    MomentReport a, b;
    a.label = "a";
    b.label = "b";
    a.layers = {{1, 0.0, 1.0, 1.0}, {2, 0.1, 0.9, 0.91}};
    b.layers = {{1, 0.5, 2.0, 2.25}, {2, -0.1, 1.5, 1.51}};
    const auto c = compare({a, b});
    EXPECT_DOUBLE_EQ(c.delta_mean(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(c.delta_variance(1, 1), 0.6);
    std::ostringstream os;
    write_csv(os, c);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "layer,a_mean,a_variance,b_mean,b_variance,b_delta_mean,b_delta_variance");
}

TEST(Compare, ErrorsOnMismatch) {
    MomentReport a, b;
    a.layers = {{1, 0, 1, 1}};
    EXPECT_THROW(compare({a}), InvalidInput);
    EXPECT_THROW(compare({a, b}), InvalidInput);
}

TEST(Csv, ReportColumns) {
    MomentReport r;
    r.layers = {{1, 0.25, 1.5, 0}};
    std::ostringstream os;
    write_csv(os, r);
    EXPECT_EQ(os.str(), "layer,mean,variance\n1,0.25,1.5\n");
}
