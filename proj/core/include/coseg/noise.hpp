#pragma once

#include <cstdint>
#include <string>

#include "coseg/data.hpp"
#include "coseg/rng.hpp"

namespace coseg {

enum class NoiseType { TypeI, TypeII };
enum class BiasDirection { Over, Under, Mixed };
enum class MorphOp { Erode, Dilate };

std::string to_string(NoiseType t);
NoiseType noise_type_from_string(const std::string& s);
std::string to_string(BiasDirection b);
BiasDirection bias_direction_from_string(const std::string& s);

struct NoiseConfig {
    NoiseType noise_type = NoiseType::TypeI;
    double nol = 0.5;          // fraction of training samples corrupted
    int n_max = 3;             // Type I: radius drawn from {1..n_max}
    BiasDirection bias_direction = BiasDirection::Mixed;  // Type II
    int bias_radius = 2;       // Type II
    double dropout_fraction = 0.3;  // Type II: chance of a missing rectangle
    std::uint64_t seed = 0;

    void validate() const;
};

/// Applies erode/dilate of `radius` to the pristine mask. An erosion that
/// would empty the mask retries with smaller radii; if radius 1 still
/// empties it, a radius-1 dilation is used instead.
LabelMask boundary_noise(const LabelMask& pristine, MorphOp op, int radius);

/// Boundary noise: op uniform over {erode, dilate}, radius uniform over {1..n_max}.
Sample corrupt_type1(const Sample& sample, const NoiseConfig& cfg, Rng& rng);

/// Annotator bias: systematic over/under segmentation by bias_radius, then,
/// with probability dropout_fraction, one axis-aligned rectangle covering
/// 10-25% of the foreground area is erased.
Sample corrupt_type2(const Sample& sample, const NoiseConfig& cfg, Rng& rng);

/// Corrupts one sample with a stream derived from (cfg.seed, sample.id).
Sample corrupt_sample(const Sample& sample, const NoiseConfig& cfg);

/// Replaces the masks of exactly round(nol * N) samples, chosen uniformly
/// without replacement from cfg.seed. Images and order are preserved.
Dataset corrupt_dataset(const Dataset& train, const NoiseConfig& cfg);

} // namespace coseg
