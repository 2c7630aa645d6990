#pragma once

#include <cstddef>

#include "coseg/data.hpp"
#include "coseg/model.hpp"

namespace coseg {

struct EvalResult {
    double acc = 0.0;
    double dic = 0.0;
    std::size_t n_samples = 0;
};

/// Fraction of pixels where pred == truth.
double pixel_accuracy(const LabelMask& pred, const LabelMask& truth);

/// 2|P n T| / (|P| + |T|) over the pixels of class `cls`; 1 when both are empty.
double dice_coefficient(const LabelMask& pred, const LabelMask& truth, ClassId cls = 1);

LabelMask predict_mask(const ModelParams& params, const GrayImage& image);

/// Mean pixel accuracy and mean foreground Dice of argmax predictions
/// against each sample's pristine mask.
EvalResult evaluate(const ModelParams& params, const Dataset& dataset);

} // namespace coseg
