#pragma once

#include <filesystem>
#include <vector>

#include "pgmseg/image.hpp"

namespace pgmseg::io {

// All readers throw std::runtime_error when a file is missing or cannot be
// decoded.

RgbImage read_rgb(const std::filesystem::path& path);
GrayImage read_gray(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const RgbImage& image);
void write_gray(const std::filesystem::path& path, const GrayImage& image);

/// One line "x y w h".
BoundingBox read_bbox_file(const std::filesystem::path& path);

struct PriorMap {
  ImageSize size;
  std::vector<double> foreground_prob;
};

/// Grayscale image, probability = value / 255.
PriorMap read_prior_map(const std::filesystem::path& path);

}  // namespace pgmseg::io
