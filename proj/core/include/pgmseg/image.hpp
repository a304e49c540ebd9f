#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace pgmseg {

/// CIELAB triplet (L, a, b).
using Lab = Eigen::Vector3d;

struct ImageSize {
  int width = 0;
  int height = 0;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool empty() const { return width <= 0 || height <= 0; }
  bool operator==(const ImageSize&) const = default;
};

/// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  ImageSize size;
  std::vector<std::uint8_t> data;
};

/// 8-bit single channel, row-major.
struct GrayImage {
  ImageSize size;
  std::vector<std::uint8_t> data;
};

struct LabImage {
  ImageSize size;
  std::vector<Lab> pixels;

  const Lab& at(int x, int y) const { return pixels[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) +
           static_cast<std::size_t>(x);
  }
};

/// sRGB (D65, standard gamma) to CIELAB for a single pixel.
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Converts a whole image. Throws std::invalid_argument on a zero-sized or
/// inconsistently sized input.
LabImage srgb_to_lab(const RgbImage& rgb);

enum class TrimapLabel : std::uint8_t { Background, Unknown, Foreground };

enum class TrimapSource { BoundingBox, File, PriorMap };

/// Half-open pixel rectangle [x, x+width) x [y, y+height).
struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(int px, int py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  std::size_t area() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool inside(ImageSize image) const {
    return width > 0 && height > 0 && x >= 0 && y >= 0 &&
           x + width <= image.width && y + height <= image.height;
  }
  /// Chebyshev distance from the pixel to the rectangle; 0 inside.
  int chebyshev_distance(int px, int py) const;
};

/// Parses "x y w h". Throws std::invalid_argument when malformed.
BoundingBox parse_bbox(std::string_view text);

struct TriMap {
  ImageSize size;
  std::vector<TrimapLabel> labels;
  TrimapSource source = TrimapSource::BoundingBox;
  std::optional<BoundingBox> box;

  std::size_t count(TrimapLabel label) const;
};

/// Outside the box is BACKGROUND, inside is UNKNOWN.
TriMap trimap_from_bbox(ImageSize image, const BoundingBox& box);

/// Grayscale trimap: 0 = BACKGROUND, 128 = UNKNOWN, 255 = FOREGROUND. Any
/// other value is rejected.
TriMap trimap_from_gray(const GrayImage& gray);

/// Pixels whose foreground probability is below `threshold` become
/// BACKGROUND, the rest UNKNOWN.
TriMap trimap_from_prior(ImageSize image, std::span<const double> foreground_prob,
                         double threshold);

struct SegMask {
  ImageSize size;
  /// 1 = foreground, 0 = background.
  std::vector<std::uint8_t> foreground;

  std::size_t foreground_count() const;
  bool operator==(const SegMask&) const = default;
};

/// Foreground 255, background 0.
GrayImage encode_mask(const SegMask& mask);

/// Values >= 128 decode as foreground.
SegMask decode_mask(const GrayImage& gray);

}  // namespace pgmseg
