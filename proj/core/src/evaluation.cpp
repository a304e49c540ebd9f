#include "pgmseg/evaluation.hpp"

#include <stdexcept>

namespace pgmseg {
namespace {

void check_sizes(const SegMask& a, const SegMask& b) {
  if (a.size != b.size || a.foreground.size() != b.foreground.size() ||
      a.foreground.size() != a.size.pixel_count()) {
    throw std::invalid_argument("mask and ground truth dimensions differ");
  }
}

}  // namespace

double bbox_error(const SegMask& mask, const SegMask& groundtruth, const BoundingBox& box) {
  check_sizes(mask, groundtruth);
  if (box.area() == 0 || !box.inside(mask.size)) {
    throw std::invalid_argument("bbox_error: empty or out-of-image bounding box");
  }
  std::size_t wrong = 0;
  for (int y = box.y; y < box.y + box.height; ++y) {
    for (int x = box.x; x < box.x + box.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * mask.size.width + x;
      wrong += (mask.foreground[p] != 0) != (groundtruth.foreground[p] != 0);
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(box.area());
}

OverlapScore overlap_score(const SegMask& mask, const SegMask& groundtruth) {
  check_sizes(mask, groundtruth);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t p = 0; p < mask.foreground.size(); ++p) {
    const bool a = mask.foreground[p] != 0;
    const bool b = groundtruth.foreground[p] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return {1.0, true};
  return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

}  // namespace pgmseg
