#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coseg/types.hpp"

namespace coseg {

enum class Provenance { Clean, CorruptedTypeI, CorruptedTypeII, Corrected };
enum class Split { Train, Test };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);
std::string to_string(Split s);

/// An image with its (possibly noisy) training label. `pristine_mask` is the
/// ground truth kept for evaluation; nothing on the training path reads it.
struct Sample {
    int id = 0;
    GrayImage image;
    LabelMask mask;
    LabelMask pristine_mask;
    Provenance provenance = Provenance::Clean;

    [[nodiscard]] bool is_corrupted() const {
        return provenance == Provenance::CorruptedTypeI || provenance == Provenance::CorruptedTypeII;
    }
    bool operator==(const Sample&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    Split split = Split::Train;
    int height = 0;
    int width = 0;
    int num_classes = 2;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
    /// Index of the sample with this id; throws InvalidArgument if absent.
    [[nodiscard]] std::size_t index_of(int id) const;

    /// Shared sizes, unique ids, class ids in range, Clean implies mask == pristine.
    void validate() const;
    bool operator==(const Dataset&) const = default;
};

/// What a learner is allowed to see of a sample.
struct TrainingView {
    int id;
    const GrayImage* image;
    const LabelMask* mask;
};

std::vector<TrainingView> training_views(const Dataset& dataset);

struct SceneParams {
    int min_blobs = 1;
    int max_blobs = 2;
    double min_foreground = 0.15;
    double max_foreground = 0.50;
    double min_axis = 0.16;   // semi-axis range as a fraction of the image size
    double max_axis = 0.34;
    double max_wobble = 0.10; // boundary perturbation amplitude relative to the radius
    double background_lo = 0.10;
    double background_hi = 0.35;
    double contrast_lo = 0.25;
    double contrast_hi = 0.45;
    double ramp = 0.08;       // peak amplitude of the smooth background gradient
    double noise_sigma = 0.08;
    int margin = 2;           // foreground may not come closer than this to the border
    int max_attempts = 64;

    void validate() const;
};

/// One synthetic scene: one or two bright wobbly ellipses on a darker ramp
/// with Gaussian noise. Intensities are quantized to multiples of 1/255 so
/// images survive a PGM round trip unchanged.
Sample generate_scene(std::uint64_t seed, int size, const SceneParams& params = {}, int id = 0);

struct Corpus {
    Dataset train;
    Dataset test;
};

/// Train ids are 0..n_train-1, test ids follow. Sample `id` uses seed mix_seed(seed, id).
Corpus make_corpus(std::uint64_t seed, int n_train, int n_test, int size,
                   const SceneParams& params = {});

} // namespace coseg
