#include "coseg/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coseg/error.hpp"

namespace coseg {

void require_same_shape(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2) {
        throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(h1) + "x" +
                              std::to_string(w1) + " vs " + std::to_string(h2) + "x" +
                              std::to_string(w2));
    }
}

void GrayImage::validate() const {
    if (height < 8 || width < 8) {
        throw InvalidArgument("GrayImage must be at least 8x8, got " + std::to_string(height) +
                              "x" + std::to_string(width));
    }
    if (pixels.size() != static_cast<std::size_t>(height) * width) {
        throw InvalidArgument("GrayImage pixel buffer does not match its dimensions");
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (!(pixels[i] >= 0.0 && pixels[i] <= 1.0)) {
            throw InvalidArgument("GrayImage intensity outside [0,1] at pixel " + std::to_string(i));
        }
    }
}

std::size_t LabelMask::count(ClassId cls) const {
    return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), cls));
}

void LabelMask::validate(int num_classes) const {
    if (classes.size() != static_cast<std::size_t>(height) * width) {
        throw InvalidArgument("LabelMask buffer does not match its dimensions");
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] >= num_classes) {
            throw InvalidArgument("LabelMask class id " + std::to_string(classes[i]) +
                                  " >= num_classes " + std::to_string(num_classes) +
                                  " at pixel " + std::to_string(i));
        }
    }
}

LabelMask ProbMap::argmax() const {
    LabelMask out(height, width);
    const std::size_t n = pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_p = at(0, i);
        for (int l = 1; l < num_classes; ++l) {
            if (at(l, i) > best_p) {
                best_p = at(l, i);
                best = l;
            }
        }
        out.classes[i] = static_cast<ClassId>(best);
    }
    return out;
}

void ProbMap::validate(double tol) const {
    if (num_classes < 2) {
        throw InvalidArgument("ProbMap needs at least 2 classes");
    }
    if (probs.size() != pixel_count() * num_classes) {
        throw InvalidArgument("ProbMap buffer does not match its dimensions");
    }
    const std::size_t n = pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int l = 0; l < num_classes; ++l) {
            const double p = at(l, i);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw InvalidArgument("ProbMap probability outside [0,1] at pixel " + std::to_string(i));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw InvalidArgument("ProbMap pixel " + std::to_string(i) + " sums to " +
                                  std::to_string(sum));
        }
    }
}

} // namespace coseg
