#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "coseg/error.hpp"
#include "coseg/model.hpp"
#include "oracles.hpp"

using namespace coseg;

TEST(ModelSpec, TinyParameterCountByHand) {
    // enc1 1->8 3x3, down 8->16 3x3, bottleneck 16->16 3x3, dec1 16->8 3x3, head (8+8)->2 1x1
    const std::size_t enc1 = 1 * 8 * 9 + 8;
    const std::size_t down = 8 * 16 * 9 + 16;
    const std::size_t bottleneck = 16 * 16 * 9 + 16;
    const std::size_t dec1 = 16 * 8 * 9 + 8;
    const std::size_t head = 16 * 2 * 1 + 2;
    EXPECT_EQ(param_count(tiny_spec()), enc1 + down + bottleneck + dec1 + head);
    EXPECT_EQ(param_count(tiny_spec()), 4762u);
    EXPECT_EQ(param_count(tiny_spec(16, 16, 2)), 4762u);
}

TEST(ModelSpec, ShapesOfTinyNetwork) {
    const auto shapes = infer_shapes(tiny_spec());
    ASSERT_EQ(shapes.size(), 7u);
    EXPECT_EQ(shapes[1], (TensorShape{16, 16, 16}));
    EXPECT_EQ(shapes[5], (TensorShape{16, 32, 32}));
    EXPECT_EQ(shapes.back(), (TensorShape{2, 32, 32}));
}

TEST(ModelSpec, InconsistentGraphNamesLayer) {
    ModelSpec spec = tiny_spec();
    spec.layers[5].skip_from = 1;  // 16x16 source against 32x32 decoder output
    try {
        infer_shapes(spec);
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("skip"), std::string::npos) << e.what();
    }
    ModelSpec odd = tiny_spec(15, 15, 2);
    EXPECT_THROW(infer_shapes(odd), InvalidArgument);
}

TEST(InitModel, DeterministicPerSeed) {
    const ModelParams a = init_model(tiny_spec(), 7);
    const ModelParams b = init_model(tiny_spec(), 7);
    const ModelParams c = init_model(tiny_spec(), 8);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
}

TEST(InitModel, GlorotBoundsAndZeroBiases) {
    const ModelParams p = init_model(tiny_spec(), 3);
    for (const ParamBlock& block : p.layout) {
        const double limit = std::sqrt(6.0 / (block.fan_in + block.fan_out));
        for (std::size_t k = 0; k < block.weight_count; ++k) {
            EXPECT_LE(std::abs(p.values[block.offset + k]), limit);
        }
        for (std::size_t k = 0; k < block.bias_count; ++k) {
            EXPECT_EQ(p.values[block.offset + block.weight_count + k], 0.0);
        }
    }
}

TEST(Forward, ZeroParamsGiveUniformProbabilities) {
    Rng rng(1);
    const ModelParams zero = zero_model(tiny_spec(16, 16, 3));
    const ProbMap probs = forward(zero, oracle::random_image(rng, 16, 16));
    for (double v : probs.probs) {
        EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
    }
}

TEST(Forward, ProbabilitiesOnSimplexAndPure) {
    Rng rng(2);
    const ModelParams p = init_model(tiny_spec(16, 16, 2), 5);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage img = oracle::random_image(rng, 16, 16);
        const ProbMap a = forward(p, img);
        EXPECT_NO_THROW(a.validate(1e-6));
        EXPECT_EQ(a, forward(p, img));
    }
}

TEST(Forward, RejectsWrongImageSizeAndNonFinite) {
    const ModelParams p = init_model(tiny_spec(16, 16, 2), 5);
    EXPECT_THROW(forward(p, GrayImage(32, 32, 0.5)), InvalidArgument);
    ModelParams bad = p;
    bad.values[0] = std::nan("");
    EXPECT_THROW(forward(bad, GrayImage(16, 16, 0.5)), NumericalError);
}

TEST(LossAndGrad, MatchesFiniteDifferences) {
    Rng rng(17);
    const ModelParams p = init_model(tiny_spec(16, 16, 2), 23);
    const GrayImage img = oracle::random_image(rng, 16, 16);
    const LabelMask mask = oracle::random_mask(rng, 16, 16, 2, 0.3);
    const auto check = oracle::finite_difference_check(p, img, mask, LossConfig{}, 50, 1e-4, 99);
    EXPECT_EQ(check.checked, 50u);
    EXPECT_LE(check.max_rel_error, 1e-3);
}

TEST(LossAndGrad, SmallStepAgreesTightly) {
    Rng rng(27);
    ModelParams p = init_model(tiny_spec(16, 16, 3), 29);
    for (double& v : p.values) v += 0.01;  // nonzero biases
    const GrayImage img = oracle::random_image(rng, 16, 16);
    const LabelMask mask = oracle::random_mask(rng, 16, 16, 3);
    const auto check = oracle::finite_difference_check(p, img, mask, LossConfig{}, 40, 1e-6, 7);
    EXPECT_LE(check.max_rel_error, 1e-3);
}

TEST(LossAndGrad, DegeneratesToCrossEntropy) {
    Rng rng(18);
    const ModelParams p = init_model(tiny_spec(16, 16, 2), 4);
    const GrayImage img = oracle::random_image(rng, 16, 16);
    const LabelMask mask = oracle::random_mask(rng, 16, 16, 2);
    LossConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    EXPECT_NEAR(loss_and_grad(p, img, mask, cfg).loss,
                cross_entropy_loss(forward(p, img), mask, cfg.prob_clamp), 1e-9);
}

TEST(LossAndGrad, PenaltyIsAdditive) {
    Rng rng(19);
    const ModelParams p = init_model(tiny_spec(16, 16, 2), 4);
    const GrayImage img = oracle::random_image(rng, 16, 16);
    const LabelMask mask = oracle::random_mask(rng, 16, 16, 2);
    LossConfig with;
    with.lambda2 = 0.01;
    LossConfig without = with;
    without.lambda2 = 0.0;
    const double diff = loss_and_grad(p, img, mask, with).loss - loss_and_grad(p, img, mask, without).loss;
    EXPECT_NEAR(diff, 0.01 * l2_penalty(p.values), 1e-12);
}

TEST(Sgd, PlainGradientDescentWithoutMomentum) {
    ModelParams p = zero_model(tiny_spec(16, 16, 2));
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = 0.001 * static_cast<double>(i % 7);
    const ModelParams before = p;
    std::vector<double> g(p.values.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.5 - static_cast<double>(i % 3);
    SgdState state;
    sgd_step(p, g, state, 0.1, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(p.values[i], before.values[i] + (0.0 * 0.0 - 0.1 * g[i]));
    }
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
    ModelParams p = init_model(tiny_spec(16, 16, 2), 1);
    const ModelParams before = p;
    const std::vector<double> g(p.values.size(), 0.0);
    SgdState state;
    sgd_step(p, g, state, 0.1, 0.9);
    EXPECT_EQ(p.values, before.values);
}

TEST(Sgd, MomentumMatchesHandUnroll) {
    ModelParams p = init_model(tiny_spec(16, 16, 2), 1);
    const ModelParams w0 = p;
    std::vector<double> g(p.values.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(static_cast<double>(i));
    SgdState state;
    sgd_step(p, g, state, 0.1, 0.9);
    const ModelParams w1 = p;
    sgd_step(p, g, state, 0.1, 0.9);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v1 = -0.1 * g[i];
        const double v2 = 0.9 * v1 - 0.1 * g[i];
        EXPECT_EQ(w1.values[i], w0.values[i] + v1);
        EXPECT_EQ(p.values[i], w1.values[i] + v2);
        EXPECT_NEAR(p.values[i] - w1.values[i], -0.1 * g[i] * 1.9, 1e-15);
    }
}

TEST(Sgd, RejectsBadHyperparameters) {
    ModelParams p = zero_model(tiny_spec(16, 16, 2));
    const std::vector<double> g(p.values.size(), 0.0);
    SgdState state;
    EXPECT_THROW(sgd_step(p, g, state, 0.0, 0.9), InvalidArgument);
    EXPECT_THROW(sgd_step(p, g, state, 0.1, 1.0), InvalidArgument);
    EXPECT_THROW(sgd_step(p, std::vector<double>(3), state, 0.1, 0.5), InvalidArgument);
}
