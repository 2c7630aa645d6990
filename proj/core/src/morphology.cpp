#include "coseg/morphology.hpp"

#include <algorithm>
#include <string>

#include "coseg/error.hpp"

namespace coseg {

namespace {

void require_binary(const LabelMask& mask, int radius) {
    if (!is_binary(mask)) {
        throw InvalidArgument("morphology requires a binary mask");
    }
    if (radius < 0) {
        throw InvalidArgument("morphology radius must be >= 0, got " + std::to_string(radius));
    }
}

} // namespace

bool is_binary(const LabelMask& mask) {
    return std::all_of(mask.classes.begin(), mask.classes.end(), [](ClassId c) { return c <= 1; });
}

LabelMask complement(const LabelMask& mask) {
    require_binary(mask, 0);
    LabelMask out = mask;
    for (auto& c : out.classes) {
        c = static_cast<ClassId>(1 - c);
    }
    return out;
}

LabelMask dilate_with_border(const LabelMask& mask, int radius, ClassId outside) {
    require_binary(mask, radius);
    if (radius == 0) {
        return mask;
    }
    const int h = mask.height;
    const int w = mask.width;
    // The square element is separable: max over rows, then over columns.
    LabelMask rows(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ClassId v = (x - radius < 0 || x + radius >= w) ? outside : ClassId{0};
            for (int k = std::max(0, x - radius); v == 0 && k <= std::min(w - 1, x + radius); ++k) {
                v = mask.at(y, k);
            }
            rows.at(y, x) = v;
        }
    }
    LabelMask out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ClassId v = (y - radius < 0 || y + radius >= h) ? outside : ClassId{0};
            for (int k = std::max(0, y - radius); v == 0 && k <= std::min(h - 1, y + radius); ++k) {
                v = rows.at(k, x);
            }
            out.at(y, x) = v;
        }
    }
    return out;
}

LabelMask dilate(const LabelMask& mask, int radius) {
    return dilate_with_border(mask, radius, 0);
}

LabelMask erode(const LabelMask& mask, int radius) {
    require_binary(mask, radius);
    if (radius == 0) {
        return mask;
    }
    return complement(dilate_with_border(complement(mask), radius, 1));
}

} // namespace coseg
