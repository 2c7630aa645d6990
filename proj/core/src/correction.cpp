#include "coseg/correction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "coseg/error.hpp"
#include "coseg/metrics.hpp"
#include "coseg/parallel.hpp"

namespace coseg {

std::vector<int> flag_noisy(std::span<const ScoredSample> scores, double noisy_fraction) {
    if (!(noisy_fraction >= 0.0 && noisy_fraction <= 1.0)) {
        throw InvalidArgument("noisy_fraction must lie in [0, 1]");
    }
    std::vector<ScoredSample> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.score != b.score ? a.score > b.score : a.id > b.id;
    });
    const auto k = static_cast<std::size_t>(
        std::llround(noisy_fraction * static_cast<double>(ranked.size())));
    std::vector<int> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ids.push_back(ranked[i].id);
    }
    return ids;
}

Sample vote_correct(const Sample& sample, const ProbMap& probs1, const ProbMap& probs2) {
    require_same_shape(sample.mask, probs1, "vote_correct");
    require_same_shape(sample.mask, probs2, "vote_correct");
    if (probs1.num_classes != probs2.num_classes) {
        throw InvalidArgument("vote_correct: the two probability maps disagree on num_classes");
    }
    const LabelMask a = probs1.argmax();
    const LabelMask b = probs2.argmax();
    Sample out = sample;
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
        if (a.classes[i] == b.classes[i] && a.classes[i] != out.mask.classes[i]) {
            out.mask.classes[i] = a.classes[i];
        }
    }
    out.provenance = Provenance::Corrected;
    return out;
}

nlohmann::json CorrectionReport::to_json() const {
    nlohmann::json changed = nlohmann::json::array();
    for (const auto& [id, count] : pixels_changed) {
        changed.push_back({{"id", id}, {"pixels_changed", count}});
    }
    nlohmann::json j = {{"flagged_ids", flagged_ids}, {"samples", changed}};
    j["mean_dice_before"] = mean_dice_before ? nlohmann::json(*mean_dice_before) : nlohmann::json();
    j["mean_dice_after"] = mean_dice_after ? nlohmann::json(*mean_dice_after) : nlohmann::json();
    return j;
}

UpdatedDataset build_updated_dataset(const Dataset& train, const ModelParams& net1,
                                     const ModelParams& net2, double noisy_fraction, double clamp) {
    UpdatedDataset out;
    out.scores = score_dataset(net1, net2, training_views(train), clamp);
    out.report.flagged_ids = flag_noisy(out.scores, noisy_fraction);
    const std::set<int> flagged(out.report.flagged_ids.begin(), out.report.flagged_ids.end());

    out.dataset = train;
    const std::size_t n = train.size();
    parallel_for(n, [&](std::size_t i) {
        const Sample& s = train.samples[i];
        if (flagged.count(s.id) != 0) {
            out.dataset.samples[i] = vote_correct(s, forward(net1, s.image), forward(net2, s.image));
        }
    });

    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& old_s = train.samples[i];
        const Sample& new_s = out.dataset.samples[i];
        std::size_t changed = 0;
        for (std::size_t p = 0; p < old_s.mask.size(); ++p) {
            changed += old_s.mask.classes[p] != new_s.mask.classes[p];
        }
        out.report.pixels_changed.emplace_back(old_s.id, changed);
        if (flagged.count(old_s.id) != 0) {
            before += dice_coefficient(old_s.mask, old_s.pristine_mask, 1);
            after += dice_coefficient(new_s.mask, new_s.pristine_mask, 1);
        }
    }
    if (!flagged.empty()) {
        out.report.mean_dice_before = before / static_cast<double>(flagged.size());
        out.report.mean_dice_after = after / static_cast<double>(flagged.size());
    }
    return out;
}

TrainResult retrain_final(const ModelSpec& spec, const Dataset& updated, const TrainConfig& cfg) {
    if (updated.empty()) {
        throw InvalidArgument("retrain_final: updated dataset is empty");
    }
    return train_single(spec, updated, cfg);
}

} // namespace coseg
