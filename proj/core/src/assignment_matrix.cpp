#include "pgmseg/assignment_matrix.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pgmseg {

AssignmentMatrix::AssignmentMatrix(PairProbMatrix pairs, std::vector<double> diagonal)
    : pairs_(std::move(pairs)), diagonal_(std::move(diagonal)) {
  if (diagonal_.size() != static_cast<std::size_t>(2 * pairs_.n)) {
    throw std::invalid_argument("AssignmentMatrix: diagonal size must be 2n");
  }
  for (double d : diagonal_) {
    if (!(d >= 0.0)) throw std::invalid_argument("AssignmentMatrix: negative diagonal entry");
  }
  for (const auto& b : pairs_.blocks) {
    if (b.i < 0 || b.j >= pairs_.n || b.i >= b.j) {
      throw std::invalid_argument("AssignmentMatrix: block indices out of order");
    }
    if (!(b.ff >= 0.0 && b.fb >= 0.0 && b.bf >= 0.0 && b.bb >= 0.0)) {
      throw std::invalid_argument("AssignmentMatrix: negative pairwise entry");
    }
  }
}

void AssignmentMatrix::multiply(std::span<const double> in, std::span<double> out) const {
  const std::size_t dim = diagonal_.size();
  for (std::size_t r = 0; r < dim; ++r) out[r] = diagonal_[r] * in[r];
  for (const auto& b : pairs_.blocks) {
    const std::size_t fi = 2 * static_cast<std::size_t>(b.i);
    const std::size_t fj = 2 * static_cast<std::size_t>(b.j);
    out[fi] += b.ff * in[fj] + b.fb * in[fj + 1];
    out[fi + 1] += b.bf * in[fj] + b.bb * in[fj + 1];
    out[fj] += b.ff * in[fi] + b.bf * in[fi + 1];
    out[fj + 1] += b.fb * in[fi] + b.bb * in[fi + 1];
  }
}

std::vector<MatrixEntry> AssignmentMatrix::coordinates() const {
  std::vector<MatrixEntry> e;
  for (std::size_t r = 0; r < diagonal_.size(); ++r) {
    if (diagonal_[r] != 0.0) e.push_back({static_cast<int>(r), static_cast<int>(r), diagonal_[r]});
  }
  for (const auto& b : pairs_.blocks) {
    const int fi = 2 * b.i;
    const int fj = 2 * b.j;
    const MatrixEntry upper[] = {
        {fi, fj, b.ff}, {fi, fj + 1, b.fb}, {fi + 1, fj, b.bf}, {fi + 1, fj + 1, b.bb}};
    for (const auto& u : upper) {
      if (u.value == 0.0) continue;
      e.push_back(u);
      e.push_back({u.col, u.row, u.value});
    }
  }
  std::sort(e.begin(), e.end(), [](const MatrixEntry& a, const MatrixEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return e;
}

Eigen::MatrixXd AssignmentMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dimension(), dimension());
  for (const auto& e : coordinates()) m(e.row, e.col) = e.value;
  return m;
}

void write_coordinates(std::ostream& out, const AssignmentMatrix& matrix) {
  const auto flags = out.flags();
  out << std::setprecision(17);
  for (const auto& e : matrix.coordinates()) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
  out.flags(flags);
}

}  // namespace pgmseg
