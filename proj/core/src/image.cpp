#include "pgmseg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pgmseg {
namespace {

double srgb_decode(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

// sRGB primaries, D65.
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// White point as the image of RGB (1,1,1), so neutral grays have a = b = 0.
constexpr double kWhite[3] = {
    kM[0][0] + kM[0][1] + kM[0][2],
    kM[1][0] + kM[1][1] + kM[1][2],
    kM[2][0] + kM[2][1] + kM[2][2],
};

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  if (t > delta * delta * delta) return std::cbrt(t);
  return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// 256-entry linearization table; the decode is the only transcendental step
// that depends on a single channel byte.
const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_decode(i / 255.0);
    return t;
  }();
  return table;
}

}  // namespace

Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& lin = linear_table();
  const double rl = lin[r];
  const double gl = lin[g];
  const double bl = lin[b];
  double xyz[3];
  for (int k = 0; k < 3; ++k) {
    xyz[k] = kM[k][0] * rl + kM[k][1] * gl + kM[k][2] * bl;
  }
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return Lab(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz));
}

LabImage srgb_to_lab(const RgbImage& rgb) {
  if (rgb.size.empty()) throw std::invalid_argument("srgb_to_lab: empty image");
  if (rgb.data.size() != 3 * rgb.size.pixel_count()) {
    throw std::invalid_argument("srgb_to_lab: buffer does not match dimensions");
  }
  LabImage out;
  out.size = rgb.size;
  out.pixels.resize(rgb.size.pixel_count());
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = srgb_to_lab(rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]);
  }
  return out;
}

int BoundingBox::chebyshev_distance(int px, int py) const {
  const int dx = std::max({x - px, 0, px - (x + width - 1)});
  const int dy = std::max({y - py, 0, py - (y + height - 1)});
  return std::max(dx, dy);
}

BoundingBox parse_bbox(std::string_view text) {
  std::istringstream in{std::string(text)};
  BoundingBox box;
  if (!(in >> box.x >> box.y >> box.width >> box.height)) {
    throw std::invalid_argument("bbox: expected four integers \"x y w h\"");
  }
  std::string rest;
  if (in >> rest) throw std::invalid_argument("bbox: trailing characters");
  if (box.width <= 0 || box.height <= 0) {
    throw std::invalid_argument("bbox: width and height must be positive");
  }
  return box;
}

std::size_t TriMap::count(TrimapLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

TriMap trimap_from_bbox(ImageSize image, const BoundingBox& box) {
  if (image.empty()) throw std::invalid_argument("trimap: empty image");
  if (!box.inside(image)) throw std::invalid_argument("trimap: bbox outside image");
  TriMap t;
  t.size = image;
  t.source = TrimapSource::BoundingBox;
  t.box = box;
  t.labels.assign(image.pixel_count(), TrimapLabel::Background);
  for (int y = box.y; y < box.y + box.height; ++y) {
    for (int x = box.x; x < box.x + box.width; ++x) {
      t.labels[static_cast<std::size_t>(y) * image.width + x] = TrimapLabel::Unknown;
    }
  }
  return t;
}

TriMap trimap_from_gray(const GrayImage& gray) {
  if (gray.size.empty()) throw std::invalid_argument("trimap: empty image");
  if (gray.data.size() != gray.size.pixel_count()) {
    throw std::invalid_argument("trimap: buffer does not match dimensions");
  }
  TriMap t;
  t.size = gray.size;
  t.source = TrimapSource::File;
  t.labels.resize(gray.data.size());
  for (std::size_t i = 0; i < gray.data.size(); ++i) {
    switch (gray.data[i]) {
      case 0: t.labels[i] = TrimapLabel::Background; break;
      case 128: t.labels[i] = TrimapLabel::Unknown; break;
      case 255: t.labels[i] = TrimapLabel::Foreground; break;
      default:
        throw std::invalid_argument("trimap: value " + std::to_string(gray.data[i]) +
                                    " is not one of 0/128/255");
    }
  }
  return t;
}

TriMap trimap_from_prior(ImageSize image, std::span<const double> foreground_prob,
                         double threshold) {
  if (image.empty()) throw std::invalid_argument("trimap: empty image");
  if (foreground_prob.size() != image.pixel_count()) {
    throw std::invalid_argument("trimap: prior map dimensions differ from image");
  }
  TriMap t;
  t.size = image;
  t.source = TrimapSource::PriorMap;
  t.labels.resize(foreground_prob.size());
  for (std::size_t i = 0; i < foreground_prob.size(); ++i) {
    t.labels[i] = foreground_prob[i] < threshold ? TrimapLabel::Background
                                                 : TrimapLabel::Unknown;
  }
  return t;
}

std::size_t SegMask::foreground_count() const {
  return static_cast<std::size_t>(std::count(foreground.begin(), foreground.end(), 1));
}

GrayImage encode_mask(const SegMask& mask) {
  GrayImage g;
  g.size = mask.size;
  g.data.resize(mask.foreground.size());
  std::transform(mask.foreground.begin(), mask.foreground.end(), g.data.begin(),
                 [](std::uint8_t f) { return f ? std::uint8_t{255} : std::uint8_t{0}; });
  return g;
}

SegMask decode_mask(const GrayImage& gray) {
  SegMask m;
  m.size = gray.size;
  m.foreground.resize(gray.data.size());
  std::transform(gray.data.begin(), gray.data.end(), m.foreground.begin(),
                 [](std::uint8_t v) { return v >= 128 ? std::uint8_t{1} : std::uint8_t{0}; });
  return m;
}

}  // namespace pgmseg
