#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pgmseg/image.hpp"

using namespace pgmseg;

namespace {

// Reference values from an independent conversion using the tabulated D65
// white (0.95047, 1, 1.08883); the library derives its white from the
// primaries, which moves results by ~1e-5.
void check_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b, Lab expected) {
  const Lab got = srgb_to_lab(r, g, b);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(got[k] - expected[k]) < 1e-3);
}

}  // namespace

TEST_CASE("srgb_to_lab reference colors") {
  check_lab(255, 255, 255, Lab(100.0, 0.0, 0.0));
  check_lab(0, 0, 0, Lab(0.0, 0.0, 0.0));
  check_lab(128, 128, 128, Lab(53.585016, 0.0, 0.0));
  check_lab(119, 119, 119, Lab(50.034439, 0.0, 0.0));
  check_lab(255, 0, 0, Lab(53.240794, 80.092460, 67.203197));
  check_lab(0, 0, 255, Lab(32.297011, 79.187520, -107.860162));
}

TEST_CASE("neutral grays have zero chroma and increasing lightness") {
  double previous = -1.0;
  for (int v = 0; v < 256; ++v) {
    const Lab c = srgb_to_lab(v, v, v);
    CHECK(std::abs(c[1]) < 1e-9);
    CHECK(std::abs(c[2]) < 1e-9);
    CHECK(c[0] > previous);
    previous = c[0];
  }
}

TEST_CASE("whole-image conversion matches per-pixel and validates buffers") {
  RgbImage rgb;
  rgb.size = {2, 1};
  rgb.data = {10, 200, 30, 250, 250, 0};
  const LabImage lab = srgb_to_lab(rgb);
  REQUIRE(lab.pixels.size() == 2);
  CHECK(lab.at(1, 0) == srgb_to_lab(250, 250, 0));

  rgb.data.pop_back();
  CHECK_THROWS_AS(srgb_to_lab(rgb), std::invalid_argument);
  CHECK_THROWS_AS(srgb_to_lab(RgbImage{}), std::invalid_argument);
}

TEST_CASE("parse_bbox") {
  const BoundingBox b = parse_bbox(" 3 4  10 20 ");
  CHECK(b.x == 3);
  CHECK(b.y == 4);
  CHECK(b.width == 10);
  CHECK(b.height == 20);
  CHECK_THROWS_AS(parse_bbox("1 2 3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bbox("1 2 3 4 5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bbox("1 2 0 4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bbox("a b c d"), std::invalid_argument);
}

TEST_CASE("chebyshev distance to a box") {
  const BoundingBox b{10, 10, 5, 5};
  CHECK(b.chebyshev_distance(12, 12) == 0);
  CHECK(b.chebyshev_distance(9, 12) == 1);
  CHECK(b.chebyshev_distance(15, 12) == 1);
  CHECK(b.chebyshev_distance(0, 0) == 10);
  CHECK(b.chebyshev_distance(17, 30) == 16);
}

TEST_CASE("bbox trimap is BACKGROUND outside and UNKNOWN inside") {
  const TriMap t = trimap_from_bbox({40, 30}, {10, 5, 20, 20});
  CHECK(t.count(TrimapLabel::Unknown) == 400);
  CHECK(t.count(TrimapLabel::Background) == 40 * 30 - 400);
  CHECK(t.count(TrimapLabel::Foreground) == 0);
  REQUIRE(t.box.has_value());
  CHECK(t.labels[5 * 40 + 10] == TrimapLabel::Unknown);
  CHECK(t.labels[5 * 40 + 9] == TrimapLabel::Background);
  CHECK_THROWS_AS(trimap_from_bbox({40, 30}, {30, 5, 20, 20}), std::invalid_argument);
}

TEST_CASE("gray trimap accepts exactly 0, 128 and 255") {
  GrayImage g;
  g.size = {3, 1};
  g.data = {0, 128, 255};
  const TriMap t = trimap_from_gray(g);
  CHECK(t.labels[0] == TrimapLabel::Background);
  CHECK(t.labels[1] == TrimapLabel::Unknown);
  CHECK(t.labels[2] == TrimapLabel::Foreground);
  g.data[1] = 127;
  CHECK_THROWS_AS(trimap_from_gray(g), std::invalid_argument);
}

TEST_CASE("prior trimap thresholds at p0") {
  const std::vector<double> prior = {0.0, 0.39, 0.4, 1.0};
  const TriMap t = trimap_from_prior({4, 1}, prior, 0.4);
  CHECK(t.labels[0] == TrimapLabel::Background);
  CHECK(t.labels[1] == TrimapLabel::Background);
  CHECK(t.labels[2] == TrimapLabel::Unknown);
  CHECK(t.labels[3] == TrimapLabel::Unknown);
  CHECK_THROWS_AS(trimap_from_prior({3, 1}, prior, 0.4), std::invalid_argument);
}

TEST_CASE("mask encode/decode round trip") {
  SegMask m;
  m.size = {3, 1};
  m.foreground = {1, 0, 1};
  const GrayImage g = encode_mask(m);
  CHECK(g.data == std::vector<std::uint8_t>{255, 0, 255});
  CHECK(decode_mask(g) == m);
  CHECK(m.foreground_count() == 2);

  GrayImage soft;
  soft.size = {2, 1};
  soft.data = {127, 128};
  CHECK(decode_mask(soft).foreground == std::vector<std::uint8_t>{0, 1});
}
