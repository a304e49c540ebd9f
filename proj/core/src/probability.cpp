#include "pgmseg/probability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgmseg {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty set");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::vector<double> distances_to_gmm(std::span<const GaussianModel> gaussians, const GmmModel& gmm) {
  std::vector<double> d(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) d[i] = kl_to_gmm(gaussians[i], gmm);
  return d;
}

double estimate_sigma_u_initial(std::span<const double> distances) {
  if (distances.empty()) throw std::invalid_argument("sigma_u: empty region");
  return std::max(median({distances.begin(), distances.end()}), kBandwidthFloor);
}

double estimate_sigma_u_initial(std::span<const GaussianModel> region, const GmmModel& gmm_fg) {
  return estimate_sigma_u_initial(distances_to_gmm(region, gmm_fg));
}

UnaryTable unary_probabilities(std::span<const double> dist_fg, std::span<const double> dist_bg,
                               double sigma_fg, double sigma_bg,
                               std::span<const TrimapLabel> states) {
  if (dist_fg.size() != dist_bg.size() || (!states.empty() && states.size() != dist_fg.size())) {
    throw std::invalid_argument("unary_probabilities: size mismatch");
  }
  if (!(sigma_fg > 0.0 && sigma_bg > 0.0)) {
    throw std::invalid_argument("unary_probabilities: bandwidths must be positive");
  }
  UnaryTable table(dist_fg.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!states.empty() && states[i] == TrimapLabel::Background) {
      table[i] = {0.0, 1.0};
      continue;
    }
    if (!states.empty() && states[i] == TrimapLabel::Foreground) {
      table[i] = {1.0, 0.0};
      continue;
    }
    // Logistic form of the normalized RBF pair; no overflow for large D.
    const double t = dist_fg[i] / sigma_fg - dist_bg[i] / sigma_bg;
    table[i] = {1.0 / (1.0 + std::exp(t)), 1.0 / (1.0 + std::exp(-t))};
  }
  return table;
}

BackgroundOnlyUnary unary_background_only(std::span<const double> dist_bg,
                                          std::span<const TrimapLabel> states) {
  if (states.size() != dist_bg.size()) {
    throw std::invalid_argument("unary_background_only: size mismatch");
  }
  std::vector<double> region;
  for (std::size_t i = 0; i < dist_bg.size(); ++i) {
    if (states[i] == TrimapLabel::Background) region.push_back(dist_bg[i]);
  }
  if (region.empty()) throw std::invalid_argument("unary_background_only: empty background");

  BackgroundOnlyUnary out;
  out.sigma = std::max(median(std::move(region)), kBandwidthFloor);
  out.table.resize(dist_bg.size());
  for (std::size_t i = 0; i < dist_bg.size(); ++i) {
    if (states[i] == TrimapLabel::Background) {
      out.table[i] = {0.0, 1.0};
    } else if (states[i] == TrimapLabel::Foreground) {
      out.table[i] = {1.0, 0.0};
    } else {
      const double pb = std::clamp(std::exp(-dist_bg[i] / out.sigma), 0.0, 1.0);
      out.table[i] = {1.0 - pb, pb};
    }
  }
  return out;
}

std::vector<double> edge_distances(const AdjacencyGraph& graph,
                                   std::span<const GaussianModel> gaussians) {
  std::vector<double> d(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    d[e] = symmetric_kl(gaussians[graph.edges[e].first], gaussians[graph.edges[e].second]);
  }
  return d;
}

std::vector<WeightedEdge> select_pairwise_neighbors(const AdjacencyGraph& graph,
                                                    std::span<const double> distances, int m) {
  if (m < 1) throw std::invalid_argument("select_pairwise_neighbors: m must be >= 1");
  if (distances.size() != graph.edges.size()) {
    throw std::invalid_argument("select_pairwise_neighbors: distance table size mismatch");
  }
  struct Candidate {
    double distance;
    int neighbor;
    std::size_t edge;
  };
  std::vector<std::vector<Candidate>> incident(graph.n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [i, j] = graph.edges[e];
    incident[i].push_back({distances[e], j, e});
    incident[j].push_back({distances[e], i, e});
  }
  std::vector<std::size_t> kept;
  for (auto& cands : incident) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.neighbor < b.neighbor;
    });
    const std::size_t take = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < take; ++k) kept.push_back(cands[k].edge);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  std::vector<WeightedEdge> out;
  out.reserve(kept.size());
  for (std::size_t e : kept) out.push_back({graph.edges[e].first, graph.edges[e].second, distances[e]});
  return out;
}

double estimate_sigma_p(std::span<const WeightedEdge> edges) {
  if (edges.empty()) throw std::invalid_argument("sigma_p: empty edge set");
  std::vector<double> d;
  d.reserve(edges.size());
  for (const auto& e : edges) d.push_back(e.distance);
  return std::max(median(std::move(d)), kBandwidthFloor);
}

PairProbMatrix pairwise_probabilities(int n, std::span<const WeightedEdge> edges,
                                      const Bandwidths& bandwidths, std::span<const Label> labels) {
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("pairwise_probabilities: label count mismatch");
  }
  PairProbMatrix p;
  p.n = n;
  p.blocks.reserve(edges.size());
  for (const auto& e : edges) {
    double sigma = bandwidths.pair_initial;
    if (!labels.empty()) {
      const bool fi = labels[e.i] == Label::Foreground;
      const bool fj = labels[e.j] == Label::Foreground;
      sigma = (fi && fj) ? bandwidths.pair_fg : (!fi && !fj) ? bandwidths.pair_bg : bandwidths.pair_mixed;
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("pairwise_probabilities: bandwidth must be positive");
    const double s = std::exp(-e.distance / sigma);
    const double same = 0.5 * s;
    const double diff = 0.5 * (1.0 - s);
    p.blocks.push_back({std::min(e.i, e.j), std::max(e.i, e.j), same, diff, diff, same});
  }
  std::sort(p.blocks.begin(), p.blocks.end(), [](const PairBlock& a, const PairBlock& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return p;
}

AssignmentMatrix assemble_assignment_matrix(const PairProbMatrix& pairs, const UnaryTable& unary,
                                            double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("assemble: lambda must be >= 0");
  if (unary.size() != static_cast<std::size_t>(pairs.n)) {
    throw std::invalid_argument("assemble: unary table size differs from superpixel count");
  }
  const double w = lambda * lambda;
  std::vector<double> diag(2 * unary.size());
  for (std::size_t i = 0; i < unary.size(); ++i) {
    diag[2 * i] = w * unary[i].fg * unary[i].fg;
    diag[2 * i + 1] = w * unary[i].bg * unary[i].bg;
  }
  return AssignmentMatrix(pairs, std::move(diag));
}

}  // namespace pgmseg
