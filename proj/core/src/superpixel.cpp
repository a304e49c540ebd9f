#include "pgmseg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <tuple>

namespace pgmseg {
namespace {

struct FloodEntry {
  double priority;
  std::uint64_t order;
  int pixel;
  int label;

  bool operator>(const FloodEntry& o) const {
    return std::tie(priority, order) > std::tie(o.priority, o.order);
  }
};

template <typename Fn>
void for_each_4_neighbor(int idx, ImageSize size, Fn&& fn) {
  const int x = idx % size.width;
  const int y = idx / size.width;
  if (x > 0) fn(idx - 1);
  if (x + 1 < size.width) fn(idx + 1);
  if (y > 0) fn(idx - size.width);
  if (y + 1 < size.height) fn(idx + size.width);
}

std::vector<bool> local_minima(const std::vector<double>& grad, ImageSize size) {
  std::vector<bool> minima(grad.size(), true);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const int idx = y * size.width + x;
      const double g = grad[idx];
      for (int dy = -1; dy <= 1 && minima[idx]; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= size.width ||
              ny >= size.height) {
            continue;
          }
          if (grad[ny * size.width + nx] < g) {
            minima[idx] = false;
            break;
          }
        }
      }
    }
  }
  return minima;
}

std::vector<int> place_markers(const std::vector<double>& grad, ImageSize size,
                               int target_size, std::uint64_t seed) {
  const int cell = std::max(1, static_cast<int>(std::lround(std::sqrt(target_size))));
  const auto minima = local_minima(grad, size);
  std::mt19937_64 rng(seed);
  std::vector<int> markers;
  std::vector<int> candidates;
  for (int cy = 0; cy < size.height; cy += cell) {
    for (int cx = 0; cx < size.width; cx += cell) {
      const int x1 = std::min(cx + cell, size.width);
      const int y1 = std::min(cy + cell, size.height);
      candidates.clear();
      double lowest = std::numeric_limits<double>::infinity();
      for (int y = cy; y < y1; ++y) {
        for (int x = cx; x < x1; ++x) {
          const int idx = y * size.width + x;
          if (minima[idx]) candidates.push_back(idx);
          lowest = std::min(lowest, grad[idx]);
        }
      }
      if (candidates.empty()) {
        for (int y = cy; y < y1; ++y) {
          for (int x = cx; x < x1; ++x) {
            const int idx = y * size.width + x;
            if (grad[idx] == lowest) candidates.push_back(idx);
          }
        }
      }
      markers.push_back(candidates[rng() % candidates.size()]);
    }
  }
  return markers;
}

// Pixels leave the queue in (gradient, insertion) order. A popped pixel
// joins whichever already-labeled 4-neighbor is closest in color, so pixels
// on a ridge (e.g. the corner of an object) are not captured by the side
// that happened to queue them first.
std::vector<int> flood(const std::vector<double>& grad, const LabImage& image,
                       const std::vector<int>& markers) {
  const ImageSize size = image.size;
  std::vector<int> labels(grad.size(), -1);
  std::priority_queue<FloodEntry, std::vector<FloodEntry>, std::greater<>> queue;
  std::uint64_t order = 0;
  for (std::size_t k = 0; k < markers.size(); ++k) labels[markers[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < markers.size(); ++k) {
    for_each_4_neighbor(markers[k], size, [&](int n) {
      if (labels[n] < 0) queue.push({grad[n], order++, n, static_cast<int>(k)});
    });
  }
  while (!queue.empty()) {
    const FloodEntry e = queue.top();
    queue.pop();
    if (labels[e.pixel] >= 0) continue;
    int label = e.label;
    double best = std::numeric_limits<double>::infinity();
    for_each_4_neighbor(e.pixel, size, [&](int n) {
      if (labels[n] < 0) return;
      const double d = (image.pixels[n] - image.pixels[e.pixel]).squaredNorm();
      if (d < best) {
        best = d;
        label = labels[n];
      }
    });
    labels[e.pixel] = label;
    for_each_4_neighbor(e.pixel, size, [&](int n) {
      if (labels[n] < 0) queue.push({grad[n], order++, n, label});
    });
  }
  return labels;
}

// Renumbers labels 0..n-1 in raster order of first appearance.
int compact_labels(std::vector<int>& labels) {
  std::vector<int> remap;
  int next = 0;
  const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
  remap.assign(static_cast<std::size_t>(max_label + 1), -1);
  for (int& l : labels) {
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
  return next;
}

void merge_small_regions(const LabImage& image, std::vector<int>& labels, int min_size) {
  const ImageSize size = image.size;
  int n = compact_labels(labels);
  while (n > 1) {
    std::vector<int> count(n, 0);
    std::vector<Lab> sum(n, Lab::Zero());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ++count[labels[i]];
      sum[labels[i]] += image.pixels[i];
    }
    int victim = -1;
    for (int r = 0; r < n; ++r) {
      if (count[r] < min_size && (victim < 0 || count[r] < count[victim])) victim = r;
    }
    if (victim < 0) break;

    std::vector<int> touching;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != victim) continue;
      for_each_4_neighbor(static_cast<int>(i), size, [&](int nb) {
        if (labels[nb] != victim) touching.push_back(labels[nb]);
      });
    }
    std::sort(touching.begin(), touching.end());
    touching.erase(std::unique(touching.begin(), touching.end()), touching.end());

    const Lab mean = sum[victim] / count[victim];
    int target = touching.front();
    double best = std::numeric_limits<double>::infinity();
    for (int t : touching) {
      const double d = (sum[t] / count[t] - mean).squaredNorm();
      if (d < best) {
        best = d;
        target = t;
      }
    }
    for (int& l : labels) {
      if (l == victim) l = target;
    }
    n = compact_labels(labels);
  }
}

}  // namespace

std::vector<double> gradient_magnitude(const LabImage& image) {
  const ImageSize size = image.size;
  std::vector<double> grad(size.pixel_count());
  for (int y = 0; y < size.height; ++y) {
    const int y0 = std::max(y - 1, 0);
    const int y1 = std::min(y + 1, size.height - 1);
    for (int x = 0; x < size.width; ++x) {
      const int x0 = std::max(x - 1, 0);
      const int x1 = std::min(x + 1, size.width - 1);
      Lab dx = Lab::Zero();
      Lab dy = Lab::Zero();
      if (x1 > x0) dx = (image.at(x1, y) - image.at(x0, y)) / (x1 - x0);
      if (y1 > y0) dy = (image.at(x, y1) - image.at(x, y0)) / (y1 - y0);
      grad[image.index(x, y)] = std::sqrt(dx.squaredNorm() + dy.squaredNorm());
    }
  }
  return grad;
}

SuperpixelPartition watershed_partition(const LabImage& image, std::uint64_t seed,
                                        const WatershedOptions& options) {
  if (image.size.empty() || image.pixels.size() != image.size.pixel_count()) {
    throw std::invalid_argument("watershed: empty image");
  }
  if (options.target_size < 1) throw std::invalid_argument("watershed: target_size < 1");

  const auto grad = gradient_magnitude(image);
  const auto markers = place_markers(grad, image.size, options.target_size, seed);

  SuperpixelPartition out;
  out.size = image.size;
  out.labels = flood(grad, image, markers);
  if (options.min_size > 1) merge_small_regions(image, out.labels, options.min_size);
  const int n = compact_labels(out.labels);

  out.superpixels.resize(n);
  for (int i = 0; i < n; ++i) out.superpixels[i].id = i;
  for (std::size_t p = 0; p < out.labels.size(); ++p) {
    out.superpixels[out.labels[p]].pixels.push_back(static_cast<int>(p));
  }
  return out;
}

void assign_trimap_states(SuperpixelPartition& partition, const TriMap& trimap) {
  if (trimap.size != partition.size) {
    throw std::invalid_argument("trimap dimensions differ from superpixel partition");
  }
  for (auto& sp : partition.superpixels) {
    std::size_t counts[3] = {0, 0, 0};
    for (int p : sp.pixels) ++counts[static_cast<int>(trimap.labels[p])];
    const auto bg = counts[static_cast<int>(TrimapLabel::Background)];
    const auto unk = counts[static_cast<int>(TrimapLabel::Unknown)];
    const auto fg = counts[static_cast<int>(TrimapLabel::Foreground)];
    if (bg > unk && bg > fg) {
      sp.trimap_state = TrimapLabel::Background;
    } else if (fg > unk && fg > bg) {
      sp.trimap_state = TrimapLabel::Foreground;
    } else {
      sp.trimap_state = TrimapLabel::Unknown;
    }
  }
}

bool AdjacencyGraph::adjacent(int i, int j) const {
  if (i < 0 || i >= n) return false;
  const auto& nb = neighbors[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

AdjacencyGraph superpixel_adjacency(std::span<const Superpixel> superpixels, ImageSize size) {
  std::vector<int> labels(size.pixel_count(), -1);
  const int n = static_cast<int>(superpixels.size());
  for (int s = 0; s < n; ++s) {
    for (int p : superpixels[s].pixels) {
      if (p < 0 || static_cast<std::size_t>(p) >= labels.size()) {
        throw std::invalid_argument("adjacency: pixel index out of range");
      }
      if (labels[p] >= 0) throw std::invalid_argument("adjacency: overlapping superpixels");
      labels[p] = s;
    }
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end()) {
    throw std::invalid_argument("adjacency: superpixels do not cover the image");
  }

  AdjacencyGraph g;
  g.n = n;
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const int a = labels[y * size.width + x];
      if (x + 1 < size.width) {
        const int b = labels[y * size.width + x + 1];
        if (a != b) g.edges.emplace_back(std::min(a, b), std::max(a, b));
      }
      if (y + 1 < size.height) {
        const int b = labels[(y + 1) * size.width + x];
        if (a != b) g.edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.neighbors.assign(n, {});
  for (const auto& [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

RgbImage render_label_map(const SuperpixelPartition& partition) {
  RgbImage img;
  img.size = partition.size;
  img.data.resize(3 * partition.size.pixel_count());
  for (std::size_t p = 0; p < partition.labels.size(); ++p) {
    // Knuth multiplicative hash spreads consecutive ids across the palette.
    const std::uint32_t h = static_cast<std::uint32_t>(partition.labels[p] + 1) * 2654435761u;
    img.data[3 * p] = static_cast<std::uint8_t>(h >> 24);
    img.data[3 * p + 1] = static_cast<std::uint8_t>(h >> 16);
    img.data[3 * p + 2] = static_cast<std::uint8_t>(h >> 8);
  }
  return img;
}

}  // namespace pgmseg
