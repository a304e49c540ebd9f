#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgmseg/assignment_matrix.hpp"
#include "pgmseg/color_model.hpp"
#include "pgmseg/image.hpp"
#include "pgmseg/probability.hpp"
#include "pgmseg/superpixel.hpp"

namespace pgmseg {

enum class SegMode { Semi, Auto, BackgroundOnly };
enum class Solver { Sgm, Pgm };

std::string_view to_string(SegMode mode);
std::string_view to_string(Solver solver);
/// "semi", "auto", "gb". Throws std::invalid_argument otherwise.
SegMode parse_mode(std::string_view text);
/// "sgm", "pgm". Throws std::invalid_argument otherwise.
Solver parse_solver(std::string_view text);

struct SegConfig {
  int kf = 3;
  int kb = 3;
  int m = 4;
  double lambda = 2.0;
  int refine_iters = 10;
  int runs = 10;
  std::uint64_t seed = 0;
  SegMode mode = SegMode::Semi;
  Solver solver = Solver::Pgm;
  int target_sp_size = 200;
  /// Background training band outside a bounding box, in pixels.
  int ring_width = 10;
  /// Foreground-probability threshold for prior maps.
  double p0 = 0.4;

  /// Throws std::invalid_argument when a count is < 1 or lambda < 0.
  void validate() const;
  std::string summary() const;
};

/// Memo of class-model fits keyed by (pixel set, K, EM seed). A fit is a pure
/// function of that key, so sharing one cache across runs, or across threads,
/// never changes a result. Holds at most `capacity` entries (oldest evicted).
class ColorModelCache {
 public:
  explicit ColorModelCache(std::size_t capacity = 64) : capacity_(capacity) {}

  /// GMM over image.pixels[p] for p in `pixels` (sorted, unique). K is reduced
  /// to |pixels|/3 for small sets; fewer than 3 pixels give a single Gaussian.
  GmmModel fit(const LabImage& image, std::vector<int> pixels, int k, std::uint64_t seed);

  std::size_t size() const;
  std::size_t hits() const;

 private:
  struct Entry {
    std::vector<int> pixels;
    int k;
    std::uint64_t seed;
    GmmModel model;
  };
  std::size_t capacity_;
  std::size_t hits_ = 0;
  std::vector<Entry> entries_;
  mutable std::mutex mutex_;
};

/// Everything about one watershed run that stays fixed across refinement.
struct SuperpixelGraph {
  SuperpixelPartition partition;
  std::vector<GaussianModel> gaussians;
  std::vector<TrimapLabel> states;
  AdjacencyGraph adjacency;
  std::vector<double> adjacency_distances;
  /// Pairwise support: the m most similar neighbors per superpixel.
  std::vector<WeightedEdge> edges;

  int size() const { return static_cast<int>(gaussians.size()); }
};

SuperpixelGraph build_superpixel_graph(const LabImage& image, const TriMap& trimap,
                                       const SegConfig& config, std::uint64_t seed);

struct IterationState {
  int t = 0;
  /// F_t / B_t as one label per superpixel, so the two sets always partition
  /// the superpixels.
  std::vector<Label> labels;
  std::optional<GmmModel> gmm_fg;
  std::optional<GmmModel> gmm_bg;
  Bandwidths bandwidths;
  MarginalTable marginals;
  /// Unary probabilities come from the background model alone.
  bool background_only = false;

  std::vector<int> members(Label label) const;
};

/// t = 0 models. Bounding-box trimaps train GMM_B on the pixels of
/// BACKGROUND superpixels inside the ring_width band around the box, other
/// trimaps on all BACKGROUND superpixels. GMM_F comes from FOREGROUND
/// superpixels when present, otherwise from all UNKNOWN ones; gb mode skips
/// GMM_F. Throws std::invalid_argument when the trimap yields no BACKGROUND
/// or no non-BACKGROUND superpixel.
/// EM seeds derive from config.seed alone, so runs differ only through their
/// watershed markers; `cache` may be null.
IterationState init_models(const SuperpixelGraph& graph, const LabImage& image,
                           const TriMap& trimap, const SegConfig& config,
                           ColorModelCache* cache = nullptr);

/// Within-class means for the unary and same-label pairwise bandwidths,
/// median of mixed-label edges for pair_mixed. Empty sets keep the previous
/// value in state.bandwidths.
Bandwidths refine_bandwidths(const IterationState& state, const SuperpixelGraph& graph);

/// Unary table for the current state (two-model or background-only).
UnaryTable current_unary(const IterationState& state, const SuperpixelGraph& graph);

struct RunHooks {
  /// One line per iteration: t, #F, #B, label changes.
  std::ostream* progress = nullptr;
  /// Receives the assignment matrix solved in the last iteration.
  AssignmentMatrix* final_matrix = nullptr;
  /// Receives the superpixel partition.
  SuperpixelPartition* partition = nullptr;
};

struct SegResult {
  SegMask mask;
  std::vector<Label> superpixel_labels;
  int iterations = 0;
  /// Labels stopped changing before the iteration cap.
  bool converged = false;
  /// All superpixels ended in one class; the mask is that trivial labeling.
  bool degenerate = false;
};

/// One run; `seed` drives the watershed markers. `cache` may be null.
SegResult run_segmentation(const LabImage& image, const TriMap& trimap, const SegConfig& config,
                           std::uint64_t seed, const RunHooks& hooks = {},
                           ColorModelCache* cache = nullptr);

/// Per-pixel majority; ties go to background. Throws std::invalid_argument
/// on an empty list or mismatched dimensions.
SegMask majority_vote(std::span<const SegMask> masks);

struct EnsembleResult {
  SegMask mask;
  std::vector<SegResult> runs;
  int degenerate_runs = 0;
};

/// config.runs reruns with watershed seeds config.seed + r, fused by
/// majority vote. The runs share one ColorModelCache.
EnsembleResult segment(const LabImage& image, const TriMap& trimap, const SegConfig& config,
                       const RunHooks& hooks = {});

}  // namespace pgmseg
