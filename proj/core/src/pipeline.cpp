#include "pgmseg/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pgmseg/inference.hpp"

namespace pgmseg {
namespace {

// Decorrelates the seeds handed to watershed and the EM fits.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<int> gather_pixel_ids(const SuperpixelGraph& graph, std::span<const int> ids) {
  std::vector<int> out;
  for (int id : ids) {
    const auto& px = graph.partition.superpixels[id].pixels;
    out.insert(out.end(), px.begin(), px.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Reduces K when a class holds too few pixels for a K-component fit.
GmmModel fit_class_model(std::span<const Lab> pixels, int k, std::uint64_t seed) {
  if (pixels.empty()) throw std::invalid_argument("cannot fit a color model to an empty class");
  const int usable = std::max(1, std::min<int>(k, static_cast<int>(pixels.size() / 3)));
  if (pixels.size() < 3) return GmmModel({GmmComponent{1.0, fit_gaussian(pixels)}});
  return fit_gmm(pixels, usable, seed).model;
}

std::vector<GaussianModel> subset(const SuperpixelGraph& graph, std::span<const int> ids) {
  std::vector<GaussianModel> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(graph.gaussians[id]);
  return out;
}

GmmModel fit_pixels(const LabImage& image, std::vector<int> pixels, int k, std::uint64_t seed,
                    ColorModelCache* cache) {
  if (cache) return cache->fit(image, std::move(pixels), k, seed);
  std::vector<Lab> colors;
  colors.reserve(pixels.size());
  for (int p : pixels) colors.push_back(image.pixels[p]);
  return fit_class_model(colors, k, seed);
}

void refit_models(IterationState& state, const SuperpixelGraph& graph, const LabImage& image,
                  const SegConfig& config, ColorModelCache* cache) {
  state.gmm_fg = fit_pixels(image, gather_pixel_ids(graph, state.members(Label::Foreground)), config.kf,
                            mix_seed(config.seed, 10), cache);
  state.gmm_bg = fit_pixels(image, gather_pixel_ids(graph, state.members(Label::Background)), config.kb,
                            mix_seed(config.seed, 11), cache);
  state.background_only = false;
}

}  // namespace

GmmModel ColorModelCache::fit(const LabImage& image, std::vector<int> pixels, int k,
                              std::uint64_t seed) {
  {
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_) {
      if (e.seed == seed && e.k == k && e.pixels == pixels) {
        ++hits_;
        return e.model;
      }
    }
  }
  std::vector<Lab> colors;
  colors.reserve(pixels.size());
  for (int p : pixels) colors.push_back(image.pixels[p]);
  GmmModel model = fit_class_model(colors, k, seed);
  std::lock_guard lock(mutex_);
  if (capacity_ == 0) return model;
  if (entries_.size() >= capacity_) entries_.erase(entries_.begin());
  entries_.push_back({std::move(pixels), k, seed, model});
  return model;
}

std::size_t ColorModelCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t ColorModelCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::string_view to_string(SegMode mode) {
  switch (mode) {
    case SegMode::Semi: return "semi";
    case SegMode::Auto: return "auto";
    case SegMode::BackgroundOnly: return "gb";
  }
  return "semi";
}

std::string_view to_string(Solver solver) { return solver == Solver::Sgm ? "sgm" : "pgm"; }

SegMode parse_mode(std::string_view text) {
  if (text == "semi") return SegMode::Semi;
  if (text == "auto") return SegMode::Auto;
  if (text == "gb") return SegMode::BackgroundOnly;
  throw std::invalid_argument("unknown mode: " + std::string(text));
}

Solver parse_solver(std::string_view text) {
  if (text == "sgm") return Solver::Sgm;
  if (text == "pgm") return Solver::Pgm;
  throw std::invalid_argument("unknown solver: " + std::string(text));
}

void SegConfig::validate() const {
  if (kf < 1 || kb < 1) throw std::invalid_argument("GMM component counts must be >= 1");
  if (m < 1) throw std::invalid_argument("neighbor count m must be >= 1");
  if (refine_iters < 1) throw std::invalid_argument("refine_iters must be >= 1");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (target_sp_size < 1) throw std::invalid_argument("target_sp_size must be >= 1");
  if (ring_width < 1) throw std::invalid_argument("ring_width must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
}

std::string SegConfig::summary() const {
  std::ostringstream s;
  s << "kf=" << kf << " kb=" << kb << " m=" << m << " lambda=" << lambda
    << " iters=" << refine_iters << " runs=" << runs << " seed=" << seed
    << " mode=" << to_string(mode) << " solver=" << to_string(solver)
    << " sp_size=" << target_sp_size << " p0=" << p0;
  return s.str();
}

std::vector<int> IterationState::members(Label label) const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

SuperpixelGraph build_superpixel_graph(const LabImage& image, const TriMap& trimap,
                                       const SegConfig& config, std::uint64_t seed) {
  if (trimap.size != image.size) throw std::invalid_argument("trimap and image sizes differ");
  SuperpixelGraph g;
  g.partition = watershed_partition(image, mix_seed(seed, 0), {config.target_sp_size, 5});
  assign_trimap_states(g.partition, trimap);

  g.gaussians.reserve(g.partition.superpixels.size());
  std::vector<Lab> buf;
  for (const auto& sp : g.partition.superpixels) {
    buf.clear();
    for (int p : sp.pixels) buf.push_back(image.pixels[p]);
    g.gaussians.push_back(fit_gaussian(buf));
    g.states.push_back(sp.trimap_state);
  }
  g.adjacency = superpixel_adjacency(g.partition.superpixels, image.size);
  g.adjacency_distances = edge_distances(g.adjacency, g.gaussians);
  g.edges = select_pairwise_neighbors(g.adjacency, g.adjacency_distances, config.m);
  return g;
}

IterationState init_models(const SuperpixelGraph& graph, const LabImage& image,
                           const TriMap& trimap, const SegConfig& config, ColorModelCache* cache) {
  std::vector<int> bg_ids;
  std::vector<int> unknown_ids;
  std::vector<int> fg_ids;
  for (int i = 0; i < graph.size(); ++i) {
    switch (graph.states[i]) {
      case TrimapLabel::Background: bg_ids.push_back(i); break;
      case TrimapLabel::Unknown: unknown_ids.push_back(i); break;
      case TrimapLabel::Foreground: fg_ids.push_back(i); break;
    }
  }
  if (bg_ids.empty()) throw std::invalid_argument("trimap yields no background superpixel");
  if (unknown_ids.empty() && fg_ids.empty()) {
    throw std::invalid_argument("trimap yields no unknown or foreground superpixel");
  }

  std::vector<int> bg_pixels;
  if (trimap.source == TrimapSource::BoundingBox && trimap.box) {
    const int w = image.size.width;
    for (int id : bg_ids) {
      for (int p : graph.partition.superpixels[id].pixels) {
        const int d = trimap.box->chebyshev_distance(p % w, p / w);
        if (d >= 1 && d <= config.ring_width) bg_pixels.push_back(p);
      }
    }
    std::sort(bg_pixels.begin(), bg_pixels.end());
  }
  if (bg_pixels.size() < static_cast<std::size_t>(3 * config.kb)) {
    bg_pixels = gather_pixel_ids(graph, bg_ids);
  }

  IterationState s;
  s.t = 0;
  s.labels.resize(graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    s.labels[i] = graph.states[i] == TrimapLabel::Background ? Label::Background : Label::Foreground;
  }
  s.gmm_bg = fit_pixels(image, std::move(bg_pixels), config.kb, mix_seed(config.seed, 1), cache);

  double sigma_u = 1.0;
  if (config.mode == SegMode::BackgroundOnly) {
    s.background_only = true;
    sigma_u = unary_background_only(distances_to_gmm(graph.gaussians, *s.gmm_bg), graph.states).sigma;
  } else {
    const auto& fg_region = fg_ids.empty() ? unknown_ids : fg_ids;
    s.gmm_fg = fit_pixels(image, gather_pixel_ids(graph, fg_region), config.kf, mix_seed(config.seed, 2), cache);
    sigma_u = estimate_sigma_u_initial(subset(graph, fg_region), *s.gmm_fg);
  }
  const double sigma_p = estimate_sigma_p(graph.edges);
  s.bandwidths = {sigma_u, sigma_u, sigma_u, sigma_p, sigma_p, sigma_p, sigma_p};
  return s;
}

Bandwidths refine_bandwidths(const IterationState& state, const SuperpixelGraph& graph) {
  Bandwidths b = state.bandwidths;
  const auto floor = [](double v) { return std::max(v, kBandwidthFloor); };

  const auto fg = state.members(Label::Foreground);
  const auto bg = state.members(Label::Background);
  if (state.gmm_fg && !fg.empty()) b.unary_fg = floor(mean(distances_to_gmm(subset(graph, fg), *state.gmm_fg)));
  if (state.gmm_bg && !bg.empty()) b.unary_bg = floor(mean(distances_to_gmm(subset(graph, bg), *state.gmm_bg)));

  std::vector<double> within_fg;
  std::vector<double> within_bg;
  std::vector<double> mixed;
  for (const auto& e : graph.edges) {
    const bool fi = state.labels[e.i] == Label::Foreground;
    const bool fj = state.labels[e.j] == Label::Foreground;
    (fi && fj ? within_fg : (!fi && !fj) ? within_bg : mixed).push_back(e.distance);
  }
  if (!within_fg.empty()) b.pair_fg = floor(mean(within_fg));
  if (!within_bg.empty()) b.pair_bg = floor(mean(within_bg));
  if (!mixed.empty()) b.pair_mixed = floor(median(std::move(mixed)));
  return b;
}

UnaryTable current_unary(const IterationState& state, const SuperpixelGraph& graph) {
  const auto dist_bg = distances_to_gmm(graph.gaussians, *state.gmm_bg);
  if (state.background_only) {
    // The background-only bandwidth is a pure function of the background
    // model, so it is recomputed rather than stored.
    return unary_background_only(dist_bg, graph.states).table;
  }
  const auto dist_fg = distances_to_gmm(graph.gaussians, *state.gmm_fg);
  return unary_probabilities(dist_fg, dist_bg, state.bandwidths.unary_fg,
                             state.bandwidths.unary_bg, graph.states);
}

SegResult run_segmentation(const LabImage& image, const TriMap& trimap, const SegConfig& config,
                           std::uint64_t seed, const RunHooks& hooks, ColorModelCache* cache) {
  config.validate();
  ColorModelCache local_cache;
  if (!cache) cache = &local_cache;
  const SuperpixelGraph graph = build_superpixel_graph(image, trimap, config, seed);
  IterationState state = init_models(graph, image, trimap, config, cache);

  SegResult result;
  for (int t = 1; t <= config.refine_iters; ++t) {
    const UnaryTable unary = current_unary(state, graph);
    const std::span<const Label> routing =
        t == 1 ? std::span<const Label>{} : std::span<const Label>{state.labels};
    const PairProbMatrix pairs = pairwise_probabilities(graph.size(), graph.edges, state.bandwidths, routing);

    MarginalTable marginals;
    if (config.solver == Solver::Sgm) {
      const AssignmentMatrix matrix = assemble_assignment_matrix(pairs, unary, config.lambda);
      marginals = sgm_marginals(matrix);
      if (hooks.final_matrix) *hooks.final_matrix = matrix;
    } else {
      PgmResult pgm = pgm_marginals(pairs, unary, config.lambda);
      marginals = std::move(pgm.marginals);
      if (hooks.final_matrix) *hooks.final_matrix = assemble_assignment_matrix(pgm.pairs, unary, config.lambda);
    }

    std::vector<Label> labels = ml_labels(marginals);
    for (int i = 0; i < graph.size(); ++i) {
      if (graph.states[i] == TrimapLabel::Background) labels[i] = Label::Background;
      if (graph.states[i] == TrimapLabel::Foreground) labels[i] = Label::Foreground;
    }

    int changes = 0;
    for (int i = 0; i < graph.size(); ++i) changes += labels[i] != state.labels[i];
    const auto n_fg = static_cast<int>(std::count(labels.begin(), labels.end(), Label::Foreground));
    if (hooks.progress) {
      *hooks.progress << "iter " << t << " fg " << n_fg << " bg " << graph.size() - n_fg
                      << " changed " << changes << '\n';
    }

    state.t = t;
    state.labels = std::move(labels);
    state.marginals = std::move(marginals);
    result.iterations = t;

    if (n_fg == 0 || n_fg == graph.size()) {
      result.degenerate = true;
      break;
    }
    if (t >= 2 && changes == 0) {
      result.converged = true;
      break;
    }
    refit_models(state, graph, image, config, cache);
    state.bandwidths = refine_bandwidths(state, graph);
  }

  result.superpixel_labels = state.labels;
  result.mask.size = image.size;
  result.mask.foreground.resize(image.size.pixel_count());
  for (std::size_t p = 0; p < result.mask.foreground.size(); ++p) {
    result.mask.foreground[p] = state.labels[graph.partition.labels[p]] == Label::Foreground ? 1 : 0;
  }
  if (hooks.partition) *hooks.partition = graph.partition;
  return result;
}

SegMask majority_vote(std::span<const SegMask> masks) {
  if (masks.empty()) throw std::invalid_argument("majority_vote: no masks");
  const ImageSize size = masks.front().size;
  std::vector<int> votes(size.pixel_count(), 0);
  for (const auto& m : masks) {
    if (m.size != size || m.foreground.size() != votes.size()) {
      throw std::invalid_argument("majority_vote: dimension mismatch");
    }
    for (std::size_t p = 0; p < votes.size(); ++p) votes[p] += m.foreground[p] ? 1 : 0;
  }
  SegMask out;
  out.size = size;
  out.foreground.resize(votes.size());
  const int n = static_cast<int>(masks.size());
  for (std::size_t p = 0; p < votes.size(); ++p) out.foreground[p] = 2 * votes[p] > n ? 1 : 0;
  return out;
}

EnsembleResult segment(const LabImage& image, const TriMap& trimap, const SegConfig& config,
                       const RunHooks& hooks) {
  config.validate();
  EnsembleResult out;
  ColorModelCache cache;
  std::vector<SegMask> masks;
  for (int r = 0; r < config.runs; ++r) {
    RunHooks run_hooks = hooks;
    if (r != 0) {
      run_hooks.final_matrix = nullptr;
      run_hooks.partition = nullptr;
    }
    if (hooks.progress) *hooks.progress << "run " << r << '\n';
    SegResult res = run_segmentation(image, trimap, config, config.seed + static_cast<std::uint64_t>(r), run_hooks, &cache);
    out.degenerate_runs += res.degenerate ? 1 : 0;
    masks.push_back(res.mask);
    out.runs.push_back(std::move(res));
  }
  out.mask = majority_vote(masks);
  return out;
}

}  // namespace pgmseg
