#include "pgmseg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgmseg/probability.hpp"

namespace pgmseg {
namespace {

template <typename MatVec>
EigenResult power_iterate(int dim, MatVec&& multiply, const PowerIterationOptions& options) {
  EigenResult r;
  if (dim == 0) {
    r.converged = true;
    return r;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd w(dim);

  multiply(v, w);
  const double shift = 0.5 * w.sum() / dim;

  v /= std::sqrt(static_cast<double>(dim));
  for (int it = 0; it < options.max_iterations; ++it) {
    multiply(v, w);
    w += shift * v;
    const double norm = w.norm();
    if (!(norm > 0.0)) {
      // Zero matrix: every direction is an eigenvector; keep the uniform one.
      r.converged = true;
      break;
    }
    w /= norm;
    const double diff = (w - v).cwiseAbs().maxCoeff();
    v.swap(w);
    r.iterations = it + 1;
    if (diff < options.tolerance) {
      r.converged = true;
      break;
    }
  }
  if (v.sum() < 0.0) v = -v;
  multiply(v, w);
  r.eigenvalue = v.dot(w);
  r.vector = std::move(v);
  return r;
}

}  // namespace

EigenResult leading_eigenvector(const AssignmentMatrix& matrix,
                                const PowerIterationOptions& options) {
  return power_iterate(
      matrix.dimension(),
      [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        matrix.multiply({in.data(), static_cast<std::size_t>(in.size())},
                        {out.data(), static_cast<std::size_t>(out.size())});
      },
      options);
}

EigenResult leading_eigenvector(const Eigen::MatrixXd& matrix,
                                const PowerIterationOptions& options) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("leading_eigenvector: not square");
  if (matrix.size() > 0) {
    if (matrix.minCoeff() < 0.0) throw std::invalid_argument("leading_eigenvector: negative entry");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("leading_eigenvector: matrix is not symmetric");
    }
  }
  return power_iterate(
      static_cast<int>(matrix.rows()),
      [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out.noalias() = matrix * in; },
      options);
}

MarginalTable marginals_from_eigenvector(const Eigen::VectorXd& v) {
  if (v.size() % 2 != 0) throw std::invalid_argument("marginals: odd eigenvector length");
  MarginalTable t(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = std::max(v[static_cast<Eigen::Index>(2 * i)], 0.0);
    const double b = std::max(v[static_cast<Eigen::Index>(2 * i + 1)], 0.0);
    const double s = a + b;
    t[i] = s > 0.0 ? LabelProbability{a / s, b / s} : LabelProbability{0.5, 0.5};
  }
  return t;
}

MarginalTable sgm_marginals(const AssignmentMatrix& matrix, const PowerIterationOptions& options) {
  return marginals_from_eigenvector(leading_eigenvector(matrix, options).vector);
}

MarginalTable sgm_marginals(const Eigen::MatrixXd& matrix, const PowerIterationOptions& options) {
  return marginals_from_eigenvector(leading_eigenvector(matrix, options).vector);
}

PairProbMatrix reweigh_pairs(const PairProbMatrix& base, const MarginalTable& marginals) {
  if (marginals.size() != static_cast<std::size_t>(base.n)) {
    throw std::invalid_argument("reweigh_pairs: marginal table size mismatch");
  }
  PairProbMatrix out = base;
  for (auto& b : out.blocks) {
    const auto& mi = marginals[b.i];
    const auto& mj = marginals[b.j];
    PairBlock r = b;
    r.ff *= mi.fg * mj.fg;
    r.fb *= mi.fg * mj.bg;
    r.bf *= mi.bg * mj.fg;
    r.bb *= mi.bg * mj.bg;
    const double s = r.sum();
    if (s > 0.0 && std::isfinite(s)) {
      r.ff /= s;
      r.fb /= s;
      r.bf /= s;
      r.bb /= s;
      b = r;
    }
  }
  return out;
}

PgmResult pgm_marginals(const PairProbMatrix& base, const UnaryTable& unary, double lambda,
                        const PgmOptions& options) {
  if (options.max_rounds < 1) throw std::invalid_argument("pgm: max_rounds must be >= 1");
  PgmResult result;
  PairProbMatrix current = base;
  MarginalTable previous;
  for (int round = 1; round <= options.max_rounds; ++round) {
    MarginalTable m = sgm_marginals(assemble_assignment_matrix(current, unary, lambda), options.power);
    result.rounds = round;
    bool settled = false;
    if (!previous.empty()) {
      double move = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        move = std::max({move, std::abs(m[i].fg - previous[i].fg), std::abs(m[i].bg - previous[i].bg)});
      }
      settled = move < options.tolerance;
    }
    result.marginals = m;
    if (settled) {
      result.converged = true;
      break;
    }
    if (round == options.max_rounds) break;
    previous = std::move(m);
    current = reweigh_pairs(base, previous);
  }
  result.pairs = std::move(current);
  return result;
}

std::vector<Label> ml_labels(const MarginalTable& marginals) {
  std::vector<Label> labels(marginals.size());
  std::transform(marginals.begin(), marginals.end(), labels.begin(), [](const LabelProbability& p) {
    return p.fg > p.bg ? Label::Foreground : Label::Background;
  });
  return labels;
}

}  // namespace pgmseg
