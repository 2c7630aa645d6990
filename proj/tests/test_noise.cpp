#include <gtest/gtest.h>

#include <set>

#include "coseg/error.hpp"
#include "coseg/metrics.hpp"
#include "coseg/morphology.hpp"
#include "coseg/noise.hpp"

using namespace coseg;

namespace {

Dataset clean_train(int n, std::uint64_t seed = 1) {
    return make_corpus(seed, n, 1, 32).train;
}

} // namespace

TEST(BoundaryNoise, DilateIsPlainDilation) {
    const Sample s = generate_scene(4, 32);
    EXPECT_EQ(boundary_noise(s.pristine_mask, MorphOp::Dilate, 1), dilate(s.pristine_mask, 1));
    EXPECT_EQ(boundary_noise(s.pristine_mask, MorphOp::Erode, 2), erode(s.pristine_mask, 2));
}

TEST(BoundaryNoise, VanishingErosionFallsBack) {
    LabelMask tiny(16, 16, 0);
    tiny.at(5, 5) = 1;
    tiny.at(5, 6) = 1;
    EXPECT_EQ(boundary_noise(tiny, MorphOp::Erode, 3), dilate(tiny, 1));
    LabelMask square(16, 16, 0);
    for (int y = 4; y < 7; ++y)
        for (int x = 4; x < 7; ++x) square.at(y, x) = 1;
    EXPECT_EQ(boundary_noise(square, MorphOp::Erode, 3), erode(square, 1));
}

TEST(TypeI, SingleRadiusHasTwoOutcomes) {
    NoiseConfig cfg;
    cfg.n_max = 1;
    const Sample s = generate_scene(8, 32);
    bool saw_dilate = false;
    for (int k = 0; k < 20; ++k) {
        Rng rng(k);
        const LabelMask m = corrupt_type1(s, cfg, rng).mask;
        const bool is_dilate = m == dilate(s.pristine_mask, 1);
        EXPECT_TRUE(is_dilate || m == erode(s.pristine_mask, 1));
        saw_dilate = saw_dilate || is_dilate;
    }
    EXPECT_TRUE(saw_dilate);
}

TEST(TypeI, EveryOperationAndRadiusOccurs) {
    NoiseConfig cfg;
    cfg.n_max = 3;
    std::set<std::pair<int, int>> seen;  // (is_dilate, radius)
    for (int k = 0; k < 200; ++k) {
        const Sample s = generate_scene(static_cast<std::uint64_t>(k), 32);
        Rng rng(1000 + k);
        const LabelMask m = corrupt_type1(s, cfg, rng).mask;
        for (int r = 1; r <= 3; ++r) {
            if (m == dilate(s.pristine_mask, r)) seen.insert({1, r});
            if (m == erode(s.pristine_mask, r)) seen.insert({0, r});
        }
        EXPECT_LT(dice_coefficient(m, s.pristine_mask), 1.0);
    }
    for (int op = 0; op <= 1; ++op)
        for (int r = 1; r <= 3; ++r) EXPECT_EQ(seen.count({op, r}), 1u) << op << " " << r;
}

TEST(TypeII, OverWithoutDropoutIsDilation) {
    NoiseConfig cfg;
    cfg.noise_type = NoiseType::TypeII;
    cfg.bias_direction = BiasDirection::Over;
    cfg.bias_radius = 2;
    cfg.dropout_fraction = 0.0;
    const Sample s = generate_scene(3, 32);
    Rng rng(1);
    EXPECT_EQ(corrupt_type2(s, cfg, rng).mask, dilate(s.pristine_mask, 2));
}

TEST(TypeII, DropoutRemovesForeground) {
    NoiseConfig cfg;
    cfg.noise_type = NoiseType::TypeII;
    cfg.bias_direction = BiasDirection::Over;
    cfg.dropout_fraction = 1.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Sample s = generate_scene(seed, 32);
        Rng rng(seed);
        const LabelMask m = corrupt_type2(s, cfg, rng).mask;
        EXPECT_LT(m.count(1), dilate(s.pristine_mask, 2).count(1));
        EXPECT_GT(m.count(1), 0u);
    }
}

TEST(TypeII, UnderNeverGrows) {
    NoiseConfig cfg;
    cfg.noise_type = NoiseType::TypeII;
    cfg.bias_direction = BiasDirection::Under;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Sample s = generate_scene(seed, 32);
        Rng rng(seed + 7);
        EXPECT_LE(corrupt_type2(s, cfg, rng).mask.count(1), s.pristine_mask.count(1));
    }
}

TEST(CorruptDataset, ZeroLevelIsIdentity) {
    const Dataset train = clean_train(16);
    NoiseConfig cfg;
    cfg.nol = 0.0;
    EXPECT_EQ(corrupt_dataset(train, cfg), train);
}

TEST(CorruptDataset, FullLevelCorruptsEverything) {
    const Dataset train = clean_train(16);
    for (NoiseType type : {NoiseType::TypeI, NoiseType::TypeII}) {
        NoiseConfig cfg;
        cfg.noise_type = type;
        cfg.nol = 1.0;
        const Dataset noisy = corrupt_dataset(train, cfg);
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            EXPECT_TRUE(noisy.samples[i].is_corrupted());
            EXPECT_EQ(noisy.samples[i].image, train.samples[i].image);
            EXPECT_EQ(noisy.samples[i].pristine_mask, train.samples[i].pristine_mask);
        }
    }
}

TEST(CorruptDataset, ExactCountAtHalf) {
    const Dataset train = clean_train(128);
    NoiseConfig cfg;
    cfg.nol = 0.5;
    cfg.seed = 77;
    const Dataset noisy = corrupt_dataset(train, cfg);
    int corrupted = 0;
    for (const Sample& s : noisy.samples) corrupted += s.is_corrupted() ? 1 : 0;
    EXPECT_EQ(corrupted, 64);
    EXPECT_EQ(noisy, corrupt_dataset(train, cfg));
    EXPECT_THROW(corrupt_dataset(noisy, cfg), InvalidArgument);
}

TEST(NoiseConfig, Validation) {
    NoiseConfig cfg;
    cfg.nol = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = NoiseConfig{};
    cfg.n_max = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    EXPECT_THROW(noise_type_from_string("TypeIII"), InvalidArgument);
    EXPECT_EQ(bias_direction_from_string(to_string(BiasDirection::Under)), BiasDirection::Under);
}
