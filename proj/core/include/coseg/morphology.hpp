#pragma once

#include "coseg/types.hpp"

namespace coseg {

[[nodiscard]] bool is_binary(const LabelMask& mask);

/// 0 <-> 1 for a binary mask.
LabelMask complement(const LabelMask& mask);

/// Square structuring element of half-width `radius` (Chebyshev ball).
/// Pixels outside the grid take the value `outside`.
LabelMask dilate_with_border(const LabelMask& mask, int radius, ClassId outside);

/// Binary dilation; the grid is zero padded.
LabelMask dilate(const LabelMask& mask, int radius);

/// Binary erosion with a zero-padded grid, so foreground within `radius` of
/// the border is removed. Equals complement(dilate_with_border(complement(m), r, 1)).
LabelMask erode(const LabelMask& mask, int radius);

} // namespace coseg
