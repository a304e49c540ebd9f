#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pgmseg/color_model.hpp"

using namespace pgmseg;

namespace {

const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();

GaussianModel gauss(double mx, double my, double mz, const Eigen::Matrix3d& cov) {
  return GaussianModel(Eigen::Vector3d(mx, my, mz), cov);
}

Eigen::Matrix3d cov_c() {
  Eigen::Matrix3d c;
  c << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  return c;
}

Eigen::Matrix3d cov_d() {
  Eigen::Matrix3d d;
  d << 1, 0.1, 0.3, 0.1, 2, 0, 0.3, 0, 1.5;
  return d;
}

std::vector<Lab> three_clusters(std::size_t per, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const Lab centers[3] = {Lab(20, 0, 0), Lab(60, 30, -20), Lab(80, -40, 40)};
  const std::size_t counts[3] = {per, 2 * per, 3 * per};
  std::vector<Lab> out;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) out.push_back(centers[c] + Lab(n(rng), n(rng), n(rng)));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

TEST_CASE("fit_gaussian uses the population covariance plus the floor") {
  const std::vector<Lab> px = {Lab(0, 0, 0), Lab(2, 0, 0)};
  const GaussianModel g = fit_gaussian(px);
  CHECK(g.mean()[0] == doctest::Approx(1.0));
  CHECK(g.covariance()(0, 0) == doctest::Approx(1.0 + kCovarianceFloor));
  CHECK(g.covariance()(1, 1) == doctest::Approx(kCovarianceFloor));
  CHECK(g.covariance()(0, 1) == 0.0);
  CHECK_THROWS_AS(fit_gaussian(std::vector<Lab>{}), std::invalid_argument);
}

TEST_CASE("single-pixel gaussian is well defined") {
  const std::vector<Lab> px = {Lab(10, 20, 30)};
  const GaussianModel g = fit_gaussian(px);
  CHECK(g.covariance().isApprox(kCovarianceFloor * I3));
  CHECK(std::isfinite(g.log_det()));
}

TEST_CASE("GaussianModel rejects non-SPD covariance") {
  Eigen::Matrix3d bad = I3;
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(GaussianModel(Eigen::Vector3d::Zero(), bad), std::invalid_argument);
  Eigen::Matrix3d asym = I3;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(GaussianModel(Eigen::Vector3d::Zero(), asym), std::invalid_argument);
}

TEST_CASE("log_density of the standard normal") {
  const auto g = gauss(0, 0, 0, I3);
  CHECK(g.log_density(Eigen::Vector3d::Zero()) == doctest::Approx(-1.5 * std::log(2 * M_PI)));
  CHECK(g.log_density(Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx(-1.5 * std::log(2 * M_PI) - 0.5));
}

TEST_CASE("kl_divergence reference values") {
  // Closed-form values computed independently with numpy.
  const auto a = gauss(0, 0, 0, I3);
  const auto b = gauss(1, 0, 0, 2 * I3);
  CHECK(kl_divergence(a, b) == doctest::Approx(0.5397207708).epsilon(1e-9));
  CHECK(kl_divergence(b, a) == doctest::Approx(0.9602792292).epsilon(1e-9));
  CHECK(kl_divergence(a, gauss(1, 0, 0, I3)) == doctest::Approx(0.5).epsilon(1e-12));

  const auto c = gauss(1, 2, 3, cov_c());
  const auto d = gauss(0, 2.5, 2, cov_d());
  CHECK(kl_divergence(c, d) == doctest::Approx(1.3144971543).epsilon(1e-9));
  CHECK(kl_divergence(d, c) == doctest::Approx(1.2868757740).epsilon(1e-9));
  CHECK(symmetric_kl(c, d) == doctest::Approx(1.2868757740).epsilon(1e-9));
}

TEST_CASE("KL between a unit and a scaled isotropic covariance") {
  const auto a = gauss(0, 0, 0, I3);
  const auto b = gauss(0, 0, 0, 4 * I3);
  CHECK(kl_divergence(a, b) == doctest::Approx(0.9544415417).epsilon(1e-9));
  CHECK(kl_divergence(b, a) == doctest::Approx(2.4205584583).epsilon(1e-9));
  CHECK(symmetric_kl(a, b) == doctest::Approx(0.9544415417).epsilon(1e-9));
}

TEST_CASE("KL invariants") {
  const auto c = gauss(1, 2, 3, cov_c());
  const auto d = gauss(0, 2.5, 2, cov_d());
  CHECK(std::abs(kl_divergence(c, c)) < 1e-10);
  CHECK(std::abs(kl_divergence(d, d)) < 1e-10);
  CHECK(symmetric_kl(c, d) == symmetric_kl(d, c));
  CHECK(kl_divergence(c, d) >= 0.0);
}

TEST_CASE("kl_divergence agrees with a Monte-Carlo estimate") {
  const auto p = gauss(1, 2, 3, cov_c());
  const auto q = gauss(0, 2.5, 2, cov_d());
  const Eigen::Matrix3d lp = Eigen::LLT<Eigen::Matrix3d>(p.covariance()).matrixL();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const int samples = 200000;
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector3d x = p.mean() + lp * Eigen::Vector3d(n(rng), n(rng), n(rng));
    acc += p.log_density(x) - q.log_density(x);
  }
  CHECK(acc / samples == doctest::Approx(kl_divergence(p, q)).epsilon(0.02));
}

TEST_CASE("kl_to_gmm matched-component approximation") {
  const auto g = gauss(0, 0, 0, I3);
  const GmmModel two({{0.5, gauss(0, 0, 0, I3)}, {0.5, gauss(3, 0, 0, I3)}});
  CHECK(kl_to_gmm(g, two) == doctest::Approx(0.6931471806).epsilon(1e-9));

  const GmmModel skewed({{0.8, gauss(1, 0, 0, I3)}, {0.2, gauss(0, 0, 0, 2 * I3)}});
  CHECK(kl_to_gmm(g, skewed) == doctest::Approx(0.7231435513).epsilon(1e-9));

  // Components at KL 0.1 (alpha 0.9) and KL 0 (alpha 0.1).
  const GmmModel near({{0.9, gauss(std::sqrt(0.2), 0, 0, I3)}, {0.1, gauss(0, 0, 0, I3)}});
  CHECK(kl_to_gmm(g, near) == doctest::Approx(0.2053605157).epsilon(1e-9));

  const GmmModel single({{1.0, gauss(1, 0, 0, 2 * I3)}});
  CHECK(kl_to_gmm(g, single) == doctest::Approx(kl_divergence(g, gauss(1, 0, 0, 2 * I3))));
}

TEST_CASE("GmmModel validates its weights") {
  CHECK_THROWS_AS(GmmModel({{0.5, gauss(0, 0, 0, I3)}}), std::invalid_argument);
  CHECK_THROWS_AS(GmmModel({}), std::invalid_argument);
}

TEST_CASE("fit_gaussian on a large sample is within 3 standard errors") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  const int count = 20000;
  std::vector<Lab> px;
  for (int i = 0; i < count; ++i) px.push_back(Lab(10 + 2 * n(rng), -5 + n(rng), 3 * n(rng)));
  const auto g = fit_gaussian(px);
  const double se = 1.0 / std::sqrt(count);
  CHECK(std::abs(g.mean()[0] - 10) < 3 * 2 * se);
  CHECK(std::abs(g.mean()[1] + 5) < 3 * se);
  CHECK(std::abs(g.mean()[2]) < 3 * 3 * se);
  // Var(s^2) = 2 sigma^4 / n for a normal sample.
  CHECK(std::abs(g.covariance()(0, 0) - 4) < 3 * 4 * std::sqrt(2.0 / count));
  CHECK(std::abs(g.covariance()(2, 2) - 9) < 3 * 9 * std::sqrt(2.0 / count));
}

TEST_CASE("fit_gmm separates two distant clusters") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Lab> px;
  for (int i = 0; i < 500; ++i) px.push_back(Lab(n(rng), n(rng), n(rng)));
  for (int i = 0; i < 500; ++i) px.push_back(Lab(50 + n(rng), n(rng), n(rng)));
  const auto fit = fit_gmm(px, 2, 1);
  auto comps = fit.model.components();
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    return a.gaussian.mean()[0] < b.gaussian.mean()[0];
  });
  CHECK((comps[0].gaussian.mean() - Eigen::Vector3d(0, 0, 0)).norm() < 1.0);
  CHECK((comps[1].gaussian.mean() - Eigen::Vector3d(50, 0, 0)).norm() < 1.0);
  CHECK(std::abs(comps[0].weight - 0.5) < 0.1);
}

TEST_CASE("fit_gmm with K = 1 equals fit_gaussian") {
  const auto px = three_clusters(50, 1);
  const auto fit = fit_gmm(px, 1, 0);
  const auto ref = fit_gaussian(px);
  REQUIRE(fit.model.size() == 1);
  CHECK(fit.model.components()[0].weight == 1.0);
  CHECK(fit.model.components()[0].gaussian.mean().isApprox(ref.mean()));
  CHECK(fit.model.components()[0].gaussian.covariance().isApprox(ref.covariance()));
}

TEST_CASE("fit_gmm log-likelihood is nondecreasing") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto px = three_clusters(80, seed);
    for (int k : {2, 3, 5}) {
      const auto fit = fit_gmm(px, k, seed);
      REQUIRE(!fit.log_likelihood.empty());
      for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
        CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1]);
      }
      CHECK(fit.log_likelihood.size() <= 101u);
      CHECK(fit.model.mean_log_likelihood(px) ==
            doctest::Approx(fit.log_likelihood.back()).epsilon(1e-6));
    }
  }
}

TEST_CASE("fit_gmm recovers well-separated clusters") {
  const auto px = three_clusters(200, 9);
  const auto fit = fit_gmm(px, 3, 4);
  std::vector<double> w;
  for (const auto& c : fit.model.components()) w.push_back(c.weight);
  std::sort(w.begin(), w.end());
  CHECK(w[0] == doctest::Approx(1.0 / 6).epsilon(0.01));
  CHECK(w[1] == doctest::Approx(2.0 / 6).epsilon(0.01));
  CHECK(w[2] == doctest::Approx(3.0 / 6).epsilon(0.01));
  double wsum = 0.0;
  for (const auto& c : fit.model.components()) {
    wsum += c.weight;
    CHECK(c.gaussian.covariance().diagonal().maxCoeff() < 2.0);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_gmm is deterministic for a seed and floors covariances") {
  const auto px = three_clusters(60, 2);
  const auto a = fit_gmm(px, 4, 17);
  const auto b = fit_gmm(px, 4, 17);
  CHECK(a.log_likelihood == b.log_likelihood);

  std::vector<Lab> repeated(30, Lab(50, 0, 0));
  for (int i = 0; i < 30; ++i) repeated.push_back(Lab(10, 5, 5));
  const auto flat = fit_gmm(repeated, 2, 0);
  for (const auto& c : flat.model.components()) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c.gaussian.covariance());
    CHECK(es.eigenvalues().minCoeff() >= kCovarianceFloor * (1 - 1e-9));
  }
}

TEST_CASE("fit_gmm needs at least 3K samples") {
  const std::vector<Lab> px(5, Lab(1, 2, 3));
  CHECK_THROWS_AS(fit_gmm(px, 2, 0), std::invalid_argument);
  CHECK_NOTHROW(fit_gmm(std::vector<Lab>(6, Lab(1, 2, 3)), 2, 0));
}
