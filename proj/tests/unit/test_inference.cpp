#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "pgmseg/inference.hpp"
#include "pgmseg/probability.hpp"

using namespace pgmseg;

namespace {

Eigen::MatrixXd random_nonnegative_symmetric(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = r; c < dim; ++c) m(r, c) = m(c, r) = u(rng);
  }
  return m;
}

PairProbMatrix chain(const std::vector<double>& distances, double sigma) {
  std::vector<WeightedEdge> edges;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    edges.push_back({static_cast<int>(k), static_cast<int>(k) + 1, distances[k]});
  }
  Bandwidths bw;
  bw.pair_initial = sigma;
  return pairwise_probabilities(static_cast<int>(distances.size()) + 1, edges, bw);
}

double block_entry(const PairBlock& b, Label li, Label lj) {
  if (li == Label::Foreground) return lj == Label::Foreground ? b.ff : b.fb;
  return lj == Label::Foreground ? b.bf : b.bb;
}

// Score of a labeling: product of the selected block entries and unary terms.
std::vector<Label> brute_force_map(const PairProbMatrix& pairs, const UnaryTable& unary) {
  const int n = pairs.n;
  double best = -1.0;
  std::vector<Label> best_labels;
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<Label> l(n);
    double score = 1.0;
    for (int i = 0; i < n; ++i) {
      l[i] = (mask >> i) & 1 ? Label::Foreground : Label::Background;
      score *= l[i] == Label::Foreground ? unary[i].fg : unary[i].bg;
    }
    for (const auto& b : pairs.blocks) score *= block_entry(b, l[b.i], l[b.j]);
    if (score > best) {
      best = score;
      best_labels = l;
    }
  }
  return best_labels;
}

}  // namespace

TEST_CASE("diagonal matrix picks the larger diagonal per superpixel") {
  const AssignmentMatrix m(PairProbMatrix{2, {}}, {4.0, 1.0, 1.0, 4.0});
  const auto marg = sgm_marginals(m);
  CHECK(marg[0].fg == doctest::Approx(1.0));
  CHECK(marg[0].bg == doctest::Approx(0.0));
  CHECK(marg[1].fg == doctest::Approx(0.0));
  CHECK(marg[1].bg == doctest::Approx(1.0));
}

TEST_CASE("power iteration matches a dense eigendecomposition") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = 2 + 2 * static_cast<int>(rng() % 9);
    const Eigen::MatrixXd m = random_nonnegative_symmetric(dim, rng);
    const auto got = leading_eigenvector(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ref = es.eigenvectors().col(dim - 1);
    if (ref.sum() < 0) ref = -ref;
    CHECK(got.converged);
    CHECK(got.vector.dot(ref) >= 1.0 - 1e-8);
    CHECK(got.eigenvalue == doctest::Approx(es.eigenvalues()(dim - 1)).epsilon(1e-8));
    CHECK(got.vector.norm() == doctest::Approx(1.0));
    CHECK(got.vector.minCoeff() >= -1e-10);
  }
}

TEST_CASE("power iteration converges on bipartite support") {
  // Eigenvalues +1 and -1 of equal magnitude; the shift removes the tie.
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  const auto r = leading_eigenvector(m);
  CHECK(r.converged);
  CHECK(r.vector(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.eigenvalue == doctest::Approx(1.0));
}

TEST_CASE("dense leading_eigenvector validates input") {
  Eigen::MatrixXd nonsquare(2, 3);
  nonsquare.setOnes();
  CHECK_THROWS_AS(leading_eigenvector(nonsquare), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 3, 1;
  CHECK_THROWS_AS(leading_eigenvector(asym), std::invalid_argument);
  Eigen::MatrixXd neg(2, 2);
  neg << 1, -1, -1, 1;
  CHECK_THROWS_AS(leading_eigenvector(neg), std::invalid_argument);
}

TEST_CASE("sparse and dense solvers agree") {
  const auto pairs = chain({0.5, 2.0, 0.1, 1.0}, 1.0);
  const UnaryTable u = {{0.9, 0.1}, {0.6, 0.4}, {0.3, 0.7}, {0.2, 0.8}, {0.5, 0.5}};
  const auto m = assemble_assignment_matrix(pairs, u, 2.0);
  const auto sparse = sgm_marginals(m);
  const auto dense = sgm_marginals(m.dense());
  for (std::size_t i = 0; i < sparse.size(); ++i) {
    CHECK(sparse[i].fg == doctest::Approx(dense[i].fg).epsilon(1e-9));
  }
}

TEST_CASE("marginals from an eigenvector") {
  Eigen::VectorXd v(6);
  v << 3, 1, 0, 0, 0, 2;
  const auto m = marginals_from_eigenvector(v);
  CHECK(m[0].fg == 0.75);
  CHECK(m[1].fg == 0.5);
  CHECK(m[1].bg == 0.5);
  CHECK(m[2].bg == 1.0);
}

TEST_CASE("marginal rows sum to one and labels are scale invariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = random_nonnegative_symmetric(10, rng);
    const auto a = sgm_marginals(m);
    for (const auto& r : a) CHECK(std::abs(r.fg + r.bg - 1.0) < 1e-12);
    CHECK(ml_labels(a) == ml_labels(sgm_marginals(Eigen::MatrixXd(37.0 * m))));
  }
}

TEST_CASE("ml_labels ties go to background") {
  const MarginalTable m = {{0.5, 0.5}, {0.6, 0.4}, {0.4, 0.6}};
  CHECK(ml_labels(m) ==
        std::vector<Label>{Label::Background, Label::Foreground, Label::Background});
}

TEST_CASE("uniform marginals leave the pairwise matrix unchanged") {
  const auto pairs = chain({0.5, 2.0, 0.1}, 1.0);
  const MarginalTable uniform(4, {0.5, 0.5});
  const auto re = reweigh_pairs(pairs, uniform);
  for (std::size_t k = 0; k < pairs.blocks.size(); ++k) {
    CHECK(std::abs(re.blocks[k].ff - pairs.blocks[k].ff) < 1e-12);
    CHECK(std::abs(re.blocks[k].fb - pairs.blocks[k].fb) < 1e-12);
    CHECK(std::abs(re.blocks[k].bf - pairs.blocks[k].bf) < 1e-12);
    CHECK(std::abs(re.blocks[k].bb - pairs.blocks[k].bb) < 1e-12);
  }
}

TEST_CASE("a zero marginal zeroes every entry that involves it") {
  const auto pairs = chain({0.5, 2.0}, 1.0);
  const MarginalTable m = {{0.7, 0.3}, {1.0, 0.0}, {0.2, 0.8}};
  const auto re = reweigh_pairs(pairs, m);
  // Superpixel 1 is j in block (0,1) and i in block (1,2).
  CHECK(re.blocks[0].fb == 0.0);
  CHECK(re.blocks[0].bb == 0.0);
  CHECK(re.blocks[1].bf == 0.0);
  CHECK(re.blocks[1].bb == 0.0);
  for (const auto& b : re.blocks) CHECK(std::abs(b.sum() - 1.0) < 1e-12);
}

TEST_CASE("a block that reweighs to zero resets to the original") {
  const auto pairs = chain({0.5}, 1.0);
  const MarginalTable m = {{1.0, 0.0}, {1.0, 0.0}};
  PairProbMatrix p = pairs;
  p.blocks[0].ff = 0.0;
  p.blocks[0].bb = 0.0;
  p.blocks[0].fb = 0.5;
  p.blocks[0].bf = 0.5;
  const auto re = reweigh_pairs(p, m);
  CHECK(re.blocks[0].fb == 0.5);
  CHECK(re.blocks[0].bf == 0.5);
}

TEST_CASE("PGM on a 3-superpixel chain agrees with exhaustive MAP") {
  const auto pairs = chain({0.2, 3.0}, 1.0);
  const UnaryTable u = {{0.9, 0.1}, {0.6, 0.4}, {0.2, 0.8}};
  const auto r = pgm_marginals(pairs, u, 2.0);
  CHECK(ml_labels(r.marginals) == brute_force_map(pairs, u));
  CHECK(r.rounds >= 1);
  CHECK(r.rounds <= 10);
  for (const auto& row : r.marginals) CHECK(std::abs(row.fg + row.bg - 1.0) < 1e-12);
  for (const auto& b : r.pairs.blocks) CHECK(std::abs(b.sum() - 1.0) < 1e-12);
}

TEST_CASE("PGM with uniform unaries and no edges converges immediately") {
  const PairProbMatrix empty{3, {}};
  const UnaryTable u(3, {0.5, 0.5});
  const auto r = pgm_marginals(empty, u, 2.0);
  CHECK(r.converged);
  for (const auto& row : r.marginals) CHECK(row.fg == doctest::Approx(0.5));
}
