#include "coseg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "coseg/error.hpp"

namespace coseg {

namespace {

void check_inputs(const ProbMap& probs, const LabelMask& mask) {
    require_same_shape(probs, mask, "objective");
    if (probs.probs.size() != probs.pixel_count() * probs.num_classes) {
        throw InvalidArgument("objective: ProbMap buffer does not match its dimensions");
    }
    mask.validate(probs.num_classes);
}

void check_clamp(double clamp) {
    if (!(clamp > 0.0 && clamp < 0.5)) {
        throw InvalidArgument("probability clamp must lie in (0, 0.5)");
    }
}

struct DiceSums {
    std::vector<double> overlap;    // sum_x p_l g_l
    std::vector<double> pred_sq;    // sum_x p_l^2
    std::vector<double> label_sq;   // sum_x g_l^2 (= count of class l)
};

DiceSums dice_sums(const ProbMap& probs, const LabelMask& mask) {
    const int num_classes = probs.num_classes;
    const std::size_t n = probs.pixel_count();
    DiceSums s{std::vector<double>(num_classes, 0.0), std::vector<double>(num_classes, 0.0),
               std::vector<double>(num_classes, 0.0)};
    for (int l = 0; l < num_classes; ++l) {
        const double* p = probs.probs.data() + l * n;
        double overlap = 0.0;
        double pred_sq = 0.0;
        double label = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pred_sq += p[i] * p[i];
            if (mask.classes[i] == l) {
                overlap += p[i];
                label += 1.0;
            }
        }
        s.overlap[l] = overlap;
        s.pred_sq[l] = pred_sq;
        s.label_sq[l] = label;
    }
    return s;
}

double dice_from_sums(const DiceSums& s) {
    const auto num_classes = s.overlap.size();
    double mean_term = 0.0;
    for (std::size_t l = 0; l < num_classes; ++l) {
        const double denom = s.pred_sq[l] + s.label_sq[l];
        mean_term += denom > 0.0 ? 2.0 * s.overlap[l] / denom : 1.0;
    }
    return 1.0 - mean_term / static_cast<double>(num_classes);
}

} // namespace

void LossConfig::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
        throw InvalidArgument("lambda1 and lambda2 must be nonnegative");
    }
    check_clamp(prob_clamp);
}

double cross_entropy_loss(const ProbMap& probs, const LabelMask& mask, double clamp) {
    check_inputs(probs, mask);
    check_clamp(clamp);
    const std::size_t n = probs.pixel_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(probs.at(mask.classes[i], i), clamp, 1.0 - clamp);
        sum -= std::log(p);
    }
    return sum;
}

double corruption_score(const ProbMap& probs, const LabelMask& mask, double clamp) {
    return cross_entropy_loss(probs, mask, clamp);
}

double dice_loss(const ProbMap& probs, const LabelMask& mask) {
    check_inputs(probs, mask);
    return dice_from_sums(dice_sums(probs, mask));
}

double l2_penalty(std::span<const double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        sum += w * w;
    }
    return sum;
}

double total_loss(const ProbMap& probs, const LabelMask& mask, std::span<const double> weights,
                  const LossConfig& cfg) {
    cfg.validate();
    return cross_entropy_loss(probs, mask, cfg.prob_clamp) + cfg.lambda1 * dice_loss(probs, mask) +
           cfg.lambda2 * l2_penalty(weights);
}

double data_loss_grad_wrt_probs(const ProbMap& probs, const LabelMask& mask,
                                const LossConfig& cfg, std::span<double> dprobs) {
    check_inputs(probs, mask);
    if (dprobs.size() != probs.probs.size()) {
        throw InvalidArgument("gradient buffer does not match ProbMap size");
    }
    const std::size_t n = probs.pixel_count();
    const int num_classes = probs.num_classes;
    const double clamp = cfg.prob_clamp;
    std::fill(dprobs.begin(), dprobs.end(), 0.0);

    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = mask.classes[i];
        const double raw = probs.at(y, i);
        const double p = std::clamp(raw, clamp, 1.0 - clamp);
        ce -= std::log(p);
        // The clamp has zero derivative outside its interval.
        if (raw > clamp && raw < 1.0 - clamp) {
            dprobs[y * n + i] = -1.0 / raw;
        }
    }

    if (cfg.lambda1 == 0.0) {
        return ce;
    }
    const DiceSums s = dice_sums(probs, mask);
    const double scale = -cfg.lambda1 / static_cast<double>(num_classes);
    for (int l = 0; l < num_classes; ++l) {
        const double denom = s.pred_sq[l] + s.label_sq[l];
        if (denom <= 0.0) {
            continue;
        }
        // d/dp [2 I / D] = (2 g D - 2 I * 2 p) / D^2
        const double inv_d = 1.0 / denom;
        const double a = 2.0 * inv_d;
        const double b = 4.0 * s.overlap[l] * inv_d * inv_d;
        const double* p = probs.probs.data() + l * n;
        double* d = dprobs.data() + l * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = mask.classes[i] == l ? 1.0 : 0.0;
            d[i] += scale * (a * g - b * p[i]);
        }
    }
    return ce + cfg.lambda1 * dice_from_sums(s);
}

} // namespace coseg
