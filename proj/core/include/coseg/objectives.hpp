#pragma once

#include <span>

#include "coseg/types.hpp"

namespace coseg {

struct LossConfig {
    double lambda1 = 1.0;      // Dice weight
    double lambda2 = 1e-4;     // L2 weight on all parameters
    double prob_clamp = 1e-7;  // probabilities clamped to [clamp, 1 - clamp] inside log

    void validate() const;
};

struct ScoredSample {
    int id = 0;
    double score = 0.0;

    bool operator==(const ScoredSample&) const = default;
};

/// -sum_x sum_l g_l(x) log(clamp(p_l(x))), summed over pixels.
double cross_entropy_loss(const ProbMap& probs, const LabelMask& mask, double clamp);

/// Per-sample reliability statistic; the same quantity as cross_entropy_loss.
/// Lower means the label agrees better with the prediction.
double corruption_score(const ProbMap& probs, const LabelMask& mask, double clamp);

/// 1 - (1/L) sum_l 2 sum_x p_l g_l / (sum_x p_l^2 + sum_x g_l^2).
/// A class absent from both prediction and mask contributes a term of 1.
double dice_loss(const ProbMap& probs, const LabelMask& mask);

/// ||W||_2^2 over every parameter, biases included.
double l2_penalty(std::span<const double> weights);

/// CE + lambda1 * Dice + lambda2 * ||W||^2.
double total_loss(const ProbMap& probs, const LabelMask& mask, std::span<const double> weights,
                  const LossConfig& cfg);

/// Writes d(CE + lambda1 * Dice)/dp into `dprobs` (same layout as probs.probs)
/// and returns CE + lambda1 * Dice.
double data_loss_grad_wrt_probs(const ProbMap& probs, const LabelMask& mask,
                                const LossConfig& cfg, std::span<double> dprobs);

} // namespace coseg
