#include "pgmseg/image_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace pgmseg::io {
namespace {

cv::Mat load(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("file not found: " + path.string());
  }
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw std::runtime_error("cannot decode image: " + path.string());
  return m;
}

void store(const std::filesystem::path& path, const cv::Mat& m) {
  if (!cv::imwrite(path.string(), m)) {
    throw std::runtime_error("cannot write image: " + path.string());
  }
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = load(path, cv::IMREAD_COLOR);
  RgbImage out;
  out.size = {bgr.cols, bgr.rows};
  out.data.resize(3 * out.size.pixel_count());
  std::size_t k = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.data[k++] = row[x][2];
      out.data[k++] = row[x][1];
      out.data[k++] = row[x][0];
    }
  }
  return out;
}

GrayImage read_gray(const std::filesystem::path& path) {
  cv::Mat g = load(path, cv::IMREAD_GRAYSCALE);
  GrayImage out;
  out.size = {g.cols, g.rows};
  out.data.resize(out.size.pixel_count());
  for (int y = 0; y < g.rows; ++y) {
    const auto* row = g.ptr<std::uint8_t>(y);
    std::copy(row, row + g.cols, out.data.begin() + static_cast<std::ptrdiff_t>(y) * g.cols);
  }
  return out;
}

void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat bgr(image.size.height, image.size.width, CV_8UC3);
  std::size_t k = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x, k += 3) {
      row[x] = cv::Vec3b(image.data[k + 2], image.data[k + 1], image.data[k]);
    }
  }
  store(path, bgr);
}

void write_gray(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat g(image.size.height, image.size.width, CV_8UC1,
            const_cast<std::uint8_t*>(image.data.data()));
  store(path, g);
}

BoundingBox read_bbox_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("file not found: " + path.string());
  std::string line;
  std::getline(in, line);
  return parse_bbox(line);
}

PriorMap read_prior_map(const std::filesystem::path& path) {
  GrayImage g = read_gray(path);
  PriorMap p;
  p.size = g.size;
  p.foreground_prob.resize(g.data.size());
  for (std::size_t i = 0; i < g.data.size(); ++i) p.foreground_prob[i] = g.data[i] / 255.0;
  return p;
}

}  // namespace pgmseg::io
