#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "coseg/cotrain.hpp"
#include "coseg/data.hpp"

namespace coseg {

/// Ids of the round(noisy_fraction * N) highest scores; ties go to the larger id.
std::vector<int> flag_noisy(std::span<const ScoredSample> scores, double noisy_fraction);

/// Relabels every pixel where both networks' argmax agree with each other
/// but not with the stored label. Marks the sample Corrected.
Sample vote_correct(const Sample& sample, const ProbMap& probs1, const ProbMap& probs2);

struct CorrectionReport {
    std::vector<int> flagged_ids;
    std::vector<std::pair<int, std::size_t>> pixels_changed;  // (id, count) for every sample
    // Mean foreground Dice of flagged masks against pristine masks; empty when nothing is flagged.
    std::optional<double> mean_dice_before;
    std::optional<double> mean_dice_after;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct UpdatedDataset {
    Dataset dataset;
    CorrectionReport report;
    std::vector<ScoredSample> scores;
};

/// Scores every sample with both peers, flags the noisiest, corrects them by
/// voting, and copies the rest verbatim.
UpdatedDataset build_updated_dataset(const Dataset& train, const ModelParams& net1,
                                     const ModelParams& net2, double noisy_fraction,
                                     double clamp = 1e-7);

/// Fresh network trained on the whole updated dataset with the combined loss.
TrainResult retrain_final(const ModelSpec& spec, const Dataset& updated, const TrainConfig& cfg);

} // namespace coseg
