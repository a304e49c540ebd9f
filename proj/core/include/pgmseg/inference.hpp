#pragma once

#include <vector>

#include <Eigen/Core>

#include "pgmseg/assignment_matrix.hpp"

namespace pgmseg {

struct PowerIterationOptions {
  int max_iterations = 1000;
  /// Max-norm distance between successive unit-norm iterates.
  double tolerance = 1e-10;
};

struct EigenResult {
  /// Unit 2-norm, oriented to a nonnegative sum.
  Eigen::VectorXd vector;
  double eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Leading eigenvector of a symmetric nonnegative matrix by power iteration
/// from the all-ones vector. The iteration runs on M + sI with s half the
/// mean row sum; the positive shift leaves eigenvectors unchanged and stops
/// a -lambda_max eigenvalue (bipartite support) from causing oscillation.
EigenResult leading_eigenvector(const AssignmentMatrix& matrix,
                                const PowerIterationOptions& options = {});

/// Dense variant. Throws std::invalid_argument for non-square,
/// non-symmetric or negative input.
EigenResult leading_eigenvector(const Eigen::MatrixXd& matrix,
                                const PowerIterationOptions& options = {});

/// p_i = [v_{2i}, v_{2i+1}] / (v_{2i} + v_{2i+1}); zero-sum rows give
/// [0.5, 0.5].
MarginalTable marginals_from_eigenvector(const Eigen::VectorXd& v);

/// Spectral graph matching: marginals from the leading eigenvector.
MarginalTable sgm_marginals(const AssignmentMatrix& matrix,
                            const PowerIterationOptions& options = {});
MarginalTable sgm_marginals(const Eigen::MatrixXd& matrix,
                            const PowerIterationOptions& options = {});

/// Reweighs every block of `base` by the current marginals,
///   p(i in L1, j in L2) <- p0(i in L1, j in L2) * p_m(i in L1) * p_m(j in L2),
/// then renormalizes each block to sum one. A block whose reweighted sum is
/// zero is reset to its original entries.
PairProbMatrix reweigh_pairs(const PairProbMatrix& base, const MarginalTable& marginals);

struct PgmOptions {
  int max_rounds = 10;
  /// Stop once marginals move less than this in max-norm.
  double tolerance = 1e-4;
  PowerIterationOptions power;
};

struct PgmResult {
  MarginalTable marginals;
  /// Pairwise matrix used in the last round.
  PairProbMatrix pairs;
  int rounds = 0;
  bool converged = false;
};

/// Iterative probabilistic graph matching: alternate SGM on P + lambda^2 C
/// with marginal reweighting of the original pairwise probabilities.
PgmResult pgm_marginals(const PairProbMatrix& base, const UnaryTable& unary, double lambda,
                        const PgmOptions& options = {});

/// F iff p(F) > p(B); ties go to B.
std::vector<Label> ml_labels(const MarginalTable& marginals);

}  // namespace pgmseg
