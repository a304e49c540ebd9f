#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pgmseg/image.hpp"

namespace pgmseg {

struct Superpixel {
  int id = 0;
  /// Row-major pixel indices, ascending.
  std::vector<int> pixels;
  /// Majority trimap label of the pixels; filled by assign_trimap_states.
  TrimapLabel trimap_state = TrimapLabel::Unknown;
};

struct SuperpixelPartition {
  ImageSize size;
  /// Per-pixel superpixel id.
  std::vector<int> labels;
  std::vector<Superpixel> superpixels;
};

struct WatershedOptions {
  int target_size = 200;
  /// Regions smaller than this are merged into their most similar neighbor.
  int min_size = 5;
};

/// Per-pixel gradient magnitude: central differences (one-sided at the
/// border) on each LAB channel, Euclidean norm over all six derivatives.
std::vector<double> gradient_magnitude(const LabImage& image);

/// Marker-based watershed over the LAB gradient.
///
/// The image is tiled with cells of side round(sqrt(target_size)); one marker
/// per cell is drawn uniformly (seeded) among the cell's local gradient
/// minima, or among its minimum-gradient pixels when the cell holds no local
/// minimum. Basins are flooded in a priority queue ordered by (gradient,
/// insertion order) over 4-connectivity, so the output is a full disjoint
/// cover of 4-connected regions and depends only on (image, seed, options).
SuperpixelPartition watershed_partition(const LabImage& image, std::uint64_t seed,
                                        const WatershedOptions& options = {});

/// Majority vote of trimap labels per superpixel; ties resolve to UNKNOWN.
void assign_trimap_states(SuperpixelPartition& partition, const TriMap& trimap);

struct AdjacencyGraph {
  int n = 0;
  /// Unordered pairs stored as (i, j) with i < j, sorted.
  std::vector<std::pair<int, int>> edges;
  /// Sorted neighbor ids per superpixel.
  std::vector<std::vector<int>> neighbors;

  bool adjacent(int i, int j) const;
};

/// Edge for every pair of superpixels sharing a 4-neighbor pixel pair.
/// Throws std::invalid_argument when the superpixels overlap or leave pixels
/// uncovered.
AdjacencyGraph superpixel_adjacency(std::span<const Superpixel> superpixels, ImageSize size);

/// Debug rendering: each superpixel in a pseudo-random color.
RgbImage render_label_map(const SuperpixelPartition& partition);

}  // namespace pgmseg
