#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pgmseg/image.hpp"

namespace pgmseg {

/// Eigenvalue floor applied to every fitted covariance.
inline constexpr double kCovarianceFloor = 1e-4;

/// Three-dimensional Gaussian with cached precision and log-determinant.
class GaussianModel {
 public:
  /// Throws std::invalid_argument unless `covariance` is symmetric positive
  /// definite.
  GaussianModel(const Eigen::Vector3d& mean, const Eigen::Matrix3d& covariance);

  const Eigen::Vector3d& mean() const { return mean_; }
  const Eigen::Matrix3d& covariance() const { return covariance_; }
  const Eigen::Matrix3d& precision() const { return precision_; }
  double log_det() const { return log_det_; }

  double log_density(const Eigen::Vector3d& x) const;

 private:
  Eigen::Vector3d mean_;
  Eigen::Matrix3d covariance_;
  Eigen::Matrix3d precision_;
  double log_det_ = 0.0;
};

/// Sample mean and population covariance plus kCovarianceFloor * I.
/// Throws std::invalid_argument on an empty sample.
GaussianModel fit_gaussian(std::span<const Lab> pixels);

struct GmmComponent {
  double weight;
  GaussianModel gaussian;
};

class GmmModel {
 public:
  /// Weights must be positive and sum to one within 1e-12.
  explicit GmmModel(std::vector<GmmComponent> components);

  const std::vector<GmmComponent>& components() const { return components_; }
  int size() const { return static_cast<int>(components_.size()); }

  double log_density(const Eigen::Vector3d& x) const;
  /// Mean per-sample log-likelihood.
  double mean_log_likelihood(std::span<const Lab> samples) const;

 private:
  std::vector<GmmComponent> components_;
};

struct GmmFitOptions {
  int max_iterations = 100;
  /// Stop once the mean per-sample log-likelihood gains less than this.
  double tolerance = 1e-6;
};

struct GmmFitResult {
  GmmModel model;
  /// Mean per-sample log-likelihood of the initial model, then after each EM
  /// update; at most max_iterations + 1 entries.
  std::vector<double> log_likelihood;
};

/// EM with seeded k-means++ initialization. K = 1 reduces to fit_gaussian.
/// For K > 1 the M-step clips covariance eigenvalues at kCovarianceFloor,
/// which is the constrained likelihood maximizer and keeps the
/// log-likelihood sequence nondecreasing.
/// Throws std::invalid_argument when fewer than 3K samples are given.
GmmFitResult fit_gmm(std::span<const Lab> samples, int k, std::uint64_t seed,
                     const GmmFitOptions& options = {});

/// KL(p || q) between two Gaussians, including the -d term so that
/// KL(p || p) = 0.
double kl_divergence(const GaussianModel& p, const GaussianModel& q);

/// min(KL(a || b), KL(b || a)).
double symmetric_kl(const GaussianModel& a, const GaussianModel& b);

/// Matched-component approximation: min_j KL(g || o_j) - log(alpha_j).
double kl_to_gmm(const GaussianModel& g, const GmmModel& gmm);

}  // namespace pgmseg
