#include "coseg/metrics.hpp"

#include <algorithm>
#include <vector>

#include "coseg/error.hpp"
#include "coseg/parallel.hpp"

namespace coseg {

double pixel_accuracy(const LabelMask& pred, const LabelMask& truth) {
    require_same_shape(pred, truth, "pixel_accuracy");
    if (pred.size() == 0) {
        throw InvalidArgument("pixel_accuracy: empty masks");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        same += pred.classes[i] == truth.classes[i] ? 1 : 0;
    }
    return static_cast<double>(same) / static_cast<double>(pred.size());
}

double dice_coefficient(const LabelMask& pred, const LabelMask& truth, ClassId cls) {
    require_same_shape(pred, truth, "dice_coefficient");
    std::size_t p = 0;
    std::size_t t = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool in_p = pred.classes[i] == cls;
        const bool in_t = truth.classes[i] == cls;
        p += in_p;
        t += in_t;
        both += in_p && in_t;
    }
    if (p + t == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

LabelMask predict_mask(const ModelParams& params, const GrayImage& image) {
    return forward(params, image).argmax();
}

EvalResult evaluate(const ModelParams& params, const Dataset& dataset) {
    if (dataset.empty()) {
        throw InvalidArgument("evaluate: empty dataset");
    }
    const std::size_t n = dataset.size();
    std::vector<double> acc(n);
    std::vector<double> dic(n);
    parallel_for(n, [&](std::size_t i) {
        const Sample& s = dataset.samples[i];
        const LabelMask pred = predict_mask(params, s.image);
        acc[i] = pixel_accuracy(pred, s.pristine_mask);
        dic[i] = dice_coefficient(pred, s.pristine_mask, 1);
    });
    // Sum in id order so the result does not depend on dataset ordering.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dataset.samples[a].id < dataset.samples[b].id;
    });
    EvalResult out;
    out.n_samples = n;
    for (std::size_t i : order) {
        out.acc += acc[i];
        out.dic += dic[i];
    }
    out.acc /= static_cast<double>(n);
    out.dic /= static_cast<double>(n);
    return out;
}

} // namespace coseg
