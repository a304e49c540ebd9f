#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pgmseg {

enum class Label : std::uint8_t { Foreground, Background };

/// A [p(F), p(B)] row: unary probabilities or inferred marginals.
struct LabelProbability {
  double fg = 0.5;
  double bg = 0.5;
};

using UnaryTable = std::vector<LabelProbability>;
using MarginalTable = std::vector<LabelProbability>;

/// Joint label probabilities of one superpixel pair (i < j).
/// fb = p(s_i in F, s_j in B), bf = p(s_i in B, s_j in F).
struct PairBlock {
  int i = 0;
  int j = 0;
  double ff = 0.0;
  double fb = 0.0;
  double bf = 0.0;
  double bb = 0.0;

  double sum() const { return ff + fb + bf + bb; }
};

/// Sparse pairwise assignment probabilities over n superpixels. Blocks are
/// sorted by (i, j) and each unordered pair appears at most once. As a
/// 2n x 2n matrix, superpixel i owns rows 2i (F) and 2i+1 (B) and every
/// block is mirrored across the diagonal.
struct PairProbMatrix {
  int n = 0;
  std::vector<PairBlock> blocks;
};

struct MatrixEntry {
  int row;
  int col;
  double value;
};

/// P + lambda^2 C: the pairwise blocks plus a diagonal of squared unary
/// probabilities. Symmetric and nonnegative by construction.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(PairProbMatrix pairs, std::vector<double> diagonal);

  int superpixel_count() const { return pairs_.n; }
  int dimension() const { return 2 * pairs_.n; }
  const PairProbMatrix& pairs() const { return pairs_; }
  const std::vector<double>& diagonal() const { return diagonal_; }

  /// out = M * in, accumulated in a fixed order.
  void multiply(std::span<const double> in, std::span<double> out) const;

  /// Nonzero entries sorted by (row, col).
  std::vector<MatrixEntry> coordinates() const;
  Eigen::MatrixXd dense() const;

 private:
  PairProbMatrix pairs_;
  std::vector<double> diagonal_;
};

/// "row col value" per line, sorted; 0-based indices.
void write_coordinates(std::ostream& out, const AssignmentMatrix& matrix);

}  // namespace pgmseg
