#pragma once

#include "pgmseg/image.hpp"

namespace pgmseg {

/// Fraction of pixels inside `box` where the mask disagrees with the ground
/// truth. Throws std::invalid_argument on mismatched sizes or an empty or
/// out-of-image box.
double bbox_error(const SegMask& mask, const SegMask& groundtruth, const BoundingBox& box);

struct OverlapScore {
  double value = 0.0;
  /// Both foregrounds were empty; value is defined as 1.
  bool empty_union = false;
};

/// |S n S'| / |S u S'| over the foreground sets.
OverlapScore overlap_score(const SegMask& mask, const SegMask& groundtruth);

}  // namespace pgmseg
