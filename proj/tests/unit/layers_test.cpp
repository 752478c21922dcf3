#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scnn/layers.hpp"

using namespace scnn;

namespace {
constexpr double kLambda = 1.0507009873554805;
constexpr double kAlpha = 1.6732632423543772;
} // namespace

TEST(Activations, KnownValues) {
    EXPECT_EQ(scnn::elu(0.0), 0.0);
    EXPECT_EQ(scnn::elu(2.0), 2.0);
    EXPECT_NEAR(scnn::elu(-1.0), std::exp(-1.0) - 1.0, 1e-15);
    EXPECT_EQ(scnn::selu(0.0), 0.0);
    EXPECT_NEAR(scnn::selu(1.0), kLambda, 1e-15);
    EXPECT_NEAR(scnn::selu(-1.0), kLambda * kAlpha * (std::exp(-1.0) - 1.0), 1e-14);
    EXPECT_EQ(scnn::relu(-3.0), 0.0);
    EXPECT_EQ(scnn::relu(3.0), 3.0);
}

TEST(Activations, SeluIsScaledElu) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    const SeluConstants c;
    for (int i = 0; i < 100000; ++i) {
        const double x = u(rng);
        ASSERT_NEAR(scnn::selu(x, c), c.lambda * scnn::elu(x, c.alpha), 1e-12);
    }
}

TEST(Activations, SeluSaturatesAtMinusLambdaAlpha) {
    EXPECT_NEAR(scnn::selu(-50.0), -kLambda * kAlpha, 1e-12);
    EXPECT_NEAR(SeluConstants{}.saturation(), -1.75814, 1e-4);
}

TEST(Activations, Monotone) {
    for (double x = -8; x < 8; x += 0.01) {
        EXPECT_LE(scnn::elu(x), scnn::elu(x + 0.01));
        EXPECT_LE(scnn::selu(x), scnn::selu(x + 0.01));
    }
}

TEST(Activations, DerivativesMatchCentralDifferences) {
    const double h = 1e-6;
    for (double x : {-3.0, -1.0, -0.25, 0.3, 2.0}) {
        EXPECT_NEAR(scnn::elu_grad(x), (scnn::elu(x + h) - scnn::elu(x - h)) / (2 * h), 1e-7);
        EXPECT_NEAR(scnn::selu_grad(x), (scnn::selu(x + h) - scnn::selu(x - h)) / (2 * h), 1e-7);
    }
}

TEST(Activations, TensorFormIsElementwise) {
    const auto t = Tensor::vector({-1, 0, 2});
    const auto s = scnn::selu(t);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s[i], scnn::selu(t[i]));
}

TEST(Softmax, RowsSumToOneAndAreShiftInvariant) {
    auto a = scnn::softmax(Tensor::matrix({{1, 2, 3}, {1000, 1001, 1002}}));
    for (std::size_t r = 0; r < 2; ++r) {
        double s = 0;
        for (std::size_t j = 0; j < 3; ++j) s += a.at(r, j);
        EXPECT_NEAR(s, 1.0, 1e-15);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.at(0, j), a.at(1, j), 1e-15);
    }
}

TEST(Initializers, Stddevs) {
    EXPECT_NEAR(glorot_stddev(300, 70), 0.0735214622, 1e-9);
    EXPECT_NEAR(lecun_stddev(900), 1.0 / 30.0, 1e-15);
}

TEST(Initializers, LecunNormalSampleMoments) {
    Rng rng(3);
    const auto t = init_tensor({1000, 1000}, Init::lecun_normal, 400, 1000, rng);
    const auto m = moments(t.data());
    EXPECT_NEAR(m.mean, 0.0, 5 * lecun_stddev(400) / 1000.0); // five standard errors
    EXPECT_NEAR(std::sqrt(m.variance), lecun_stddev(400), 0.01 * lecun_stddev(400));
}

TEST(Initializers, GlorotUniformBoundedWithExpectedSpread) {
    Rng rng(4);
    const auto t = init_tensor({1000, 1000}, Init::glorot_uniform, 300, 70, rng);
    const double bound = std::sqrt(6.0 / 370.0);
    for (double v : t.data()) ASSERT_LE(std::abs(v), bound);
    const auto m = moments(t.data());
    EXPECT_NEAR(std::sqrt(m.variance), glorot_stddev(300, 70), 0.01 * glorot_stddev(300, 70));
}

TEST(Initializers, ZerosAndDeterminism) {
    Rng a(9), b(9), c(9);
    EXPECT_EQ(init_tensor({3, 3}, Init::zeros, 3, 3, a), Tensor({3, 3}));
    EXPECT_EQ(lecun_normal_init(5, 4, b), lecun_normal_init(5, 4, c));
}

TEST(Dropout, RateValidation) {
    EXPECT_THROW((DropoutSpec{DropoutKind::alpha, 1.0}).validate(), InvalidInput);
    EXPECT_THROW((DropoutSpec{DropoutKind::alpha, -0.1}).validate(), InvalidInput);
    EXPECT_NO_THROW((DropoutSpec{DropoutKind::alpha, 0.0}).validate());
}

TEST(Dropout, AlphaAffineAtRatePointOne) {
    const auto ab = alpha_dropout_affine(0.1);
    EXPECT_NEAR(ab.a, 0.92128, 1e-5);
    EXPECT_NEAR(ab.b, 0.16197, 1e-5);
}

class AlphaDropoutMoments : public ::testing::TestWithParam<double> {};

TEST_P(AlphaDropoutMoments, PreservesZeroMeanUnitVariance) {
    std::mt19937_64 src(17);
    std::normal_distribution<double> n01;
    Tensor x({1000000});
    for (double& v : x.data()) v = n01(src);
    Rng rng(5);
    const auto y = alpha_dropout(x, {DropoutKind::alpha, GetParam()}, {}, true, rng);
    const auto m = moments(y.data());
    EXPECT_LT(std::abs(m.mean), 0.02);
    EXPECT_LT(std::abs(m.variance - 1.0), 0.05);
}

INSTANTIATE_TEST_SUITE_P(Rates, AlphaDropoutMoments, ::testing::Values(0.05, 0.1, 0.5));

TEST(Dropout, DroppedUnitsTakeSaturationImage) {
    Rng rng(2);
    const auto y = alpha_dropout(Tensor({1000}, 3.0), {DropoutKind::alpha, 0.5}, {}, true, rng);
    const auto ab = alpha_dropout_affine(0.5);
    std::size_t dropped = 0;
    for (double v : y.data()) {
        if (std::abs(v - (ab.a * -kLambda * kAlpha + ab.b)) < 1e-12)
            ++dropped;
        else
            EXPECT_NEAR(v, ab.a * 3.0 + ab.b, 1e-12);
    }
    EXPECT_GT(dropped, 400u);
    EXPECT_LT(dropped, 600u);
}

TEST(Dropout, InferenceIsIdentity) {
    Rng rng(1);
    const auto x = Tensor::vector({1, -2, 3});
    EXPECT_EQ(alpha_dropout(x, {DropoutKind::alpha, 0.5}, {}, false, rng), x);
    EXPECT_EQ(standard_dropout(x, {DropoutKind::standard, 0.5}, false, rng), x);
}

TEST(Dropout, StandardIsInvertedScaling) {
    Rng rng(1);
    const auto y = standard_dropout(Tensor({1000}, 1.0), {DropoutKind::standard, 0.5}, true, rng);
    for (double v : y.data()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(Dropout, KindMismatchIsAContractError) {
    Rng rng(1);
    EXPECT_THROW(standard_dropout(Tensor({2}), {DropoutKind::alpha, 0.5}, true, rng), ContractError);
    EXPECT_THROW(alpha_dropout(Tensor({2}), {DropoutKind::standard, 0.5}, {}, true, rng), ContractError);
}

TEST(Names, RoundTripAndListValidChoices) {
    for (auto a : {Activation::elu, Activation::selu, Activation::relu}) EXPECT_EQ(parse_activation(to_string(a)), a);
    for (auto i : {Init::lecun_normal, Init::glorot_uniform, Init::zeros}) EXPECT_EQ(parse_init(to_string(i)), i);
    try {
        parse_activation("tanh");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("valid: elu, selu, relu"), std::string::npos);
    }
}
