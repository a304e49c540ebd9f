#include "pgmseg/color_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace pgmseg {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

Eigen::Matrix3d clip_eigenvalues(const Eigen::Matrix3d& cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d vals = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

std::vector<Lab> kmeans_plus_plus(std::span<const Lab> samples, int k, std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  std::vector<Lab> centers;
  centers.push_back(samples[rng() % n]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (samples[i] - centers[0]).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng() % n;
    } else {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > u) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(samples[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (samples[i] - centers.back()).squaredNorm());
    }
  }
  return centers;
}

struct Moments {
  double weight = 0.0;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
};

// Per-component weighted moments to model parameters. Components with no
// mass keep their previous parameters.
std::vector<GmmComponent> maximize(const std::vector<Moments>& moments, std::size_t n,
                                   const std::vector<GmmComponent>* previous,
                                   const Eigen::Matrix3d& fallback_cov,
                                   const std::vector<Lab>& fallback_means) {
  const int k = static_cast<int>(moments.size());
  std::vector<double> weights(k);
  std::vector<Eigen::Vector3d> means(k);
  std::vector<Eigen::Matrix3d> covs(k);
  for (int c = 0; c < k; ++c) {
    const Moments& m = moments[c];
    if (m.weight > 0.0) {
      means[c] = m.sum / m.weight;
      Eigen::Matrix3d cov = m.outer / m.weight - means[c] * means[c].transpose();
      cov = 0.5 * (cov + cov.transpose());
      covs[c] = clip_eigenvalues(cov, kCovarianceFloor);
    } else if (previous) {
      means[c] = (*previous)[c].gaussian.mean();
      covs[c] = (*previous)[c].gaussian.covariance();
    } else {
      means[c] = fallback_means[c];
      covs[c] = clip_eigenvalues(fallback_cov, kCovarianceFloor);
    }
    weights[c] = std::max(m.weight / static_cast<double>(n), std::numeric_limits<double>::min());
  }
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<GmmComponent> comps;
  comps.reserve(k);
  for (int c = 0; c < k; ++c) comps.push_back({weights[c] / total, GaussianModel(means[c], covs[c])});
  return comps;
}

}  // namespace

GaussianModel::GaussianModel(const Eigen::Vector3d& mean, const Eigen::Matrix3d& covariance)
    : mean_(mean) {
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("GaussianModel: covariance is not symmetric");
  }
  covariance_ = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<Eigen::Matrix3d> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianModel: covariance is not positive definite");
  }
  const Eigen::Matrix3d l = llt.matrixL();
  log_det_ = 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)) + std::log(l(2, 2)));
  if (!std::isfinite(log_det_)) {
    throw std::invalid_argument("GaussianModel: covariance is singular");
  }
  precision_ = llt.solve(Eigen::Matrix3d::Identity());
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double GaussianModel::log_density(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d d = x - mean_;
  return -0.5 * (3.0 * kLog2Pi + log_det_ + d.dot(precision_ * d));
}

GaussianModel fit_gaussian(std::span<const Lab> pixels) {
  if (pixels.empty()) throw std::invalid_argument("fit_gaussian: empty pixel set");
  const double n = static_cast<double>(pixels.size());
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pixels) mean += p;
  mean /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pixels) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  cov /= n;
  cov += kCovarianceFloor * Eigen::Matrix3d::Identity();
  return GaussianModel(mean, cov);
}

GmmModel::GmmModel(std::vector<GmmComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("GmmModel: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("GmmModel: non-positive weight");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("GmmModel: weights do not sum to one");
  }
}

double GmmModel::log_density(const Eigen::Vector3d& x) const {
  double terms[64];
  const int k = std::min<int>(size(), 64);
  for (int c = 0; c < k; ++c) {
    terms[c] = std::log(components_[c].weight) + components_[c].gaussian.log_density(x);
  }
  return log_sum_exp(terms, k);
}

double GmmModel::mean_log_likelihood(std::span<const Lab> samples) const {
  double s = 0.0;
  for (const auto& x : samples) s += log_density(x);
  return s / static_cast<double>(samples.size());
}

GmmFitResult fit_gmm(std::span<const Lab> samples, int k, std::uint64_t seed,
                     const GmmFitOptions& options) {
  if (k < 1) throw std::invalid_argument("fit_gmm: K must be >= 1");
  if (samples.size() < static_cast<std::size_t>(3 * k)) {
    throw std::invalid_argument("fit_gmm: need at least 3K samples");
  }
  if (k > 64) throw std::invalid_argument("fit_gmm: K above 64 is not supported");

  if (k == 1) {
    GmmModel model({GmmComponent{1.0, fit_gaussian(samples)}});
    const double ll = model.mean_log_likelihood(samples);
    return {std::move(model), {ll}};
  }

  const std::size_t n = samples.size();
  std::mt19937_64 rng(seed);
  const std::vector<Lab> centers = kmeans_plus_plus(samples, k, rng);

  const GaussianModel global = fit_gaussian(samples);
  std::vector<Moments> moments(k);
  for (const auto& x : samples) {
    int best = 0;
    double best_d = (x - centers[0]).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double d = (x - centers[c]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    moments[best].weight += 1.0;
    moments[best].sum += x;
    moments[best].outer += x * x.transpose();
  }
  std::vector<GmmComponent> comps =
      maximize(moments, n, nullptr, global.covariance(), centers);

  // Per-sample features [1, x, y, z, xx, xy, xz, yy, yz, zz]; one matrix
  // product with the responsibilities yields every component's moments.
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::Matrix<double, Eigen::Dynamic, 10> features(rows, 10);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Lab& x = samples[static_cast<std::size_t>(i)];
    features.row(i) << 1.0, x[0], x[1], x[2], x[0] * x[0], x[0] * x[1], x[0] * x[2], x[1] * x[1],
        x[1] * x[2], x[2] * x[2];
  }

  std::vector<double> trace;
  std::vector<GmmComponent> previous;
  Eigen::ArrayXXd logp(rows, k);
  for (int iter = 0;; ++iter) {
    // E-step; also yields the log-likelihood of the current parameters.
    for (int c = 0; c < k; ++c) {
      const GaussianModel& g = comps[c].gaussian;
      const Eigen::Matrix3d chol = Eigen::LLT<Eigen::Matrix3d>(g.covariance()).matrixL();
      const Eigen::Matrix3d w = chol.triangularView<Eigen::Lower>().solve(Eigen::Matrix3d::Identity());
      const auto d0 = features.col(1).array() - g.mean()[0];
      const auto d1 = features.col(2).array() - g.mean()[1];
      const auto d2 = features.col(3).array() - g.mean()[2];
      const Eigen::ArrayXd z0 = w(0, 0) * d0;
      const Eigen::ArrayXd z1 = w(1, 0) * d0 + w(1, 1) * d1;
      const Eigen::ArrayXd z2 = w(2, 0) * d0 + w(2, 1) * d1 + w(2, 2) * d2;
      logp.col(c) = std::log(comps[c].weight) - 0.5 * (3.0 * kLog2Pi + g.log_det()) -
                    0.5 * (z0.square() + z1.square() + z2.square());
    }
    const Eigen::ArrayXd top = logp.rowwise().maxCoeff();
    Eigen::ArrayXd total = Eigen::ArrayXd::Zero(rows);
    for (int c = 0; c < k; ++c) {
      // Relative weights below exp(-700) are flushed to zero: left alone they
      // underflow to subnormals, which slow the whole E-step tenfold.
      const Eigen::ArrayXd rel = logp.col(c) - top;
      logp.col(c) = rel.max(-700.0).exp();
      logp.col(c) = (rel < -700.0).select(0.0, logp.col(c));
      total += logp.col(c);
    }
    // Sum of log(total) through chunked products; each total lies in [1, K],
    // so 64 factors stay far from overflow for K <= 64.
    double ll = top.sum();
    for (Eigen::Index i = 0; i < rows; i += 64) {
      ll += std::log(total.segment(i, std::min<Eigen::Index>(64, rows - i)).prod());
    }
    ll /= static_cast<double>(n);
    logp.colwise() /= total;

    if (!trace.empty() && ll < trace.back()) {
      // A round-off decrease at the fixed point: keep the previous model.
      comps = std::move(previous);
      break;
    }
    const bool converged = !trace.empty() && ll - trace.back() < options.tolerance;
    trace.push_back(ll);
    if (converged || iter >= options.max_iterations) break;
    for (int c = 0; c < k; ++c) {
      const Eigen::Matrix<double, 10, 1> acc = features.transpose() * logp.col(c).matrix();
      Moments& m = moments[c];
      m.weight = acc[0];
      m.sum = acc.segment<3>(1);
      m.outer << acc[4], acc[5], acc[6], acc[5], acc[7], acc[8], acc[6], acc[8], acc[9];
    }
    previous = comps;
    comps = maximize(moments, n, &comps, global.covariance(), centers);
  }
  return {GmmModel(std::move(comps)), std::move(trace)};
}

double kl_divergence(const GaussianModel& p, const GaussianModel& q) {
  const Eigen::Vector3d d = q.mean() - p.mean();
  const double trace = q.precision().cwiseProduct(p.covariance()).sum();
  const double maha = d.dot(q.precision() * d);
  const double kl = 0.5 * (q.log_det() - p.log_det() + trace + maha - 3.0);
  return std::max(kl, 0.0);
}

double symmetric_kl(const GaussianModel& a, const GaussianModel& b) {
  return std::min(kl_divergence(a, b), kl_divergence(b, a));
}

double kl_to_gmm(const GaussianModel& g, const GmmModel& gmm) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : gmm.components()) {
    best = std::min(best, kl_divergence(g, c.gaussian) - std::log(c.weight));
  }
  return best;
}

}  // namespace pgmseg
