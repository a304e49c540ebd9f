#pragma once

#include <span>
#include <vector>

#include "pgmseg/assignment_matrix.hpp"
#include "pgmseg/color_model.hpp"
#include "pgmseg/image.hpp"
#include "pgmseg/superpixel.hpp"

namespace pgmseg {

/// Lower bound for every RBF bandwidth.
inline constexpr double kBandwidthFloor = 1e-8;

/// Median; even counts average the two middle values. Throws on empty input.
double median(std::vector<double> values);
double mean(std::span<const double> values);

/// RBF bandwidths in KL units.
struct Bandwidths {
  double unary_initial = 1.0;
  double unary_fg = 1.0;
  double unary_bg = 1.0;
  double pair_initial = 1.0;
  double pair_fg = 1.0;
  double pair_bg = 1.0;
  double pair_mixed = 1.0;
};

/// Approximate KL of each superpixel Gaussian to a GMM.
std::vector<double> distances_to_gmm(std::span<const GaussianModel> gaussians, const GmmModel& gmm);

/// Median of the distances, floored at kBandwidthFloor.
double estimate_sigma_u_initial(std::span<const double> distances);
double estimate_sigma_u_initial(std::span<const GaussianModel> region, const GmmModel& gmm_fg);

/// Row i = normalized [exp(-D_F/sigma_F), exp(-D_B/sigma_B)]. Superpixels
/// whose trimap state is BACKGROUND are clamped to [0, 1] and FOREGROUND to
/// [1, 0]. `states` may be empty (no clamping).
UnaryTable unary_probabilities(std::span<const double> dist_fg, std::span<const double> dist_bg,
                               double sigma_fg, double sigma_bg,
                               std::span<const TrimapLabel> states = {});

struct BackgroundOnlyUnary {
  UnaryTable table;
  double sigma = 1.0;
};

/// p(B) = exp(-D_B/sigma), p(F) = 1 - p(B), with sigma the median distance
/// over superpixels whose state is BACKGROUND. Throws when there are none.
BackgroundOnlyUnary unary_background_only(std::span<const double> dist_bg,
                                          std::span<const TrimapLabel> states);

struct WeightedEdge {
  int i;
  int j;
  double distance;

  bool operator==(const WeightedEdge&) const = default;
};

/// Symmetric KL for every adjacency edge, in adjacency edge order.
std::vector<double> edge_distances(const AdjacencyGraph& graph,
                                   std::span<const GaussianModel> gaussians);

/// Each superpixel keeps its m adjacent neighbors of smallest distance (ties
/// by smaller neighbor id); the result is the union over both endpoints,
/// sorted by (i, j) with i < j. `distances` is parallel to graph.edges.
std::vector<WeightedEdge> select_pairwise_neighbors(const AdjacencyGraph& graph,
                                                    std::span<const double> distances, int m);

/// Median edge distance floored at kBandwidthFloor. Throws on no edges.
double estimate_sigma_p(std::span<const WeightedEdge> edges);

/// With e = exp(-D/sigma): ff = bb = e/2 and fb = bf = (1-e)/2. When `labels`
/// is non-empty the bandwidth is routed per edge by the current labels
/// (both F: pair_fg, both B: pair_bg, mixed: pair_mixed); otherwise
/// pair_initial is used everywhere.
PairProbMatrix pairwise_probabilities(int n, std::span<const WeightedEdge> edges,
                                      const Bandwidths& bandwidths,
                                      std::span<const Label> labels = {});

/// P + lambda^2 C with c_{2i,2i} = p_u(F)^2 and c_{2i+1,2i+1} = p_u(B)^2.
AssignmentMatrix assemble_assignment_matrix(const PairProbMatrix& pairs, const UnaryTable& unary,
                                            double lambda);

}  // namespace pgmseg
