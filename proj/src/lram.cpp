#include "lrsqn/lram.hpp"

#include "lrsqn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace lrsqn {

double zero_tolerance(double alpha) { return 1e-12 * std::max(1.0, std::abs(alpha)); }

EigenLmMatrix::EigenLmMatrix(Index n, double alpha) : alpha_(alpha), eigvecs_(n, 0), offsets_(0) {
  if (n < 1) throw DimensionMismatch("EigenLmMatrix: dimension must be positive");
}

EigenLmMatrix::EigenLmMatrix(double alpha, Matrix eigvecs, Vector offsets) : alpha_(alpha) {
  if (eigvecs.cols() != offsets.size())
    throw DimensionMismatch("EigenLmMatrix: " + std::to_string(eigvecs.cols()) + " eigenvectors but " +
                            std::to_string(offsets.size()) + " offsets");
  if (eigvecs.rows() < 1) throw DimensionMismatch("EigenLmMatrix: dimension must be positive");
  if (eigvecs.cols() > eigvecs.rows()) throw DimensionMismatch("EigenLmMatrix: rank exceeds dimension");

  const Index r = offsets.size();
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return offsets(a) < offsets(b); });
  bool sorted = true;
  for (Index i = 0; i < r; ++i) sorted = sorted && order[static_cast<std::size_t>(i)] == i;
  if (sorted) {
    eigvecs_ = std::move(eigvecs);
    offsets_ = std::move(offsets);
    return;
  }
  eigvecs_.resize(eigvecs.rows(), r);
  offsets_.resize(r);
  for (Index i = 0; i < r; ++i) {
    eigvecs_.col(i) = eigvecs.col(order[static_cast<std::size_t>(i)]);
    offsets_(i) = offsets(order[static_cast<std::size_t>(i)]);
  }
}

double EigenLmMatrix::orthonormality_error() const {
  if (rank() == 0) return 0.0;
  const Matrix g = eigvecs_.transpose() * eigvecs_;
  return (g - Matrix::Identity(rank(), rank())).cwiseAbs().maxCoeff();
}

Index SpectrumSummary::size() const {
  Index total = alpha_count;
  for (const auto& run : below) total += run.count;
  for (const auto& run : above) total += run.count;
  return total;
}

std::vector<SpectrumRun> SpectrumSummary::runs() const {
  std::vector<SpectrumRun> out(below);
  if (alpha_count > 0) out.push_back({alpha, alpha_count});
  out.insert(out.end(), above.begin(), above.end());
  return out;
}

double SpectrumSummary::min() const {
  if (!below.empty()) return below.front().value;
  if (alpha_count > 0) return alpha;
  return above.front().value;
}

double SpectrumSummary::max() const {
  if (!above.empty()) return above.back().value;
  if (alpha_count > 0) return alpha;
  return below.back().value;
}

Vector matvec(const EigenLmMatrix& m, const Vector& x) {
  if (x.size() != m.dim())
    throw DimensionMismatch("matvec: vector of length " + std::to_string(x.size()) + " for dimension " +
                            std::to_string(m.dim()));
  Vector out = m.alpha() * x;
  if (m.rank() > 0) out.noalias() += m.eigvecs() * m.offsets().cwiseProduct(m.eigvecs().transpose() * x);
  return out;
}

SpectrumSummary spectrum(const EigenLmMatrix& m) {
  SpectrumSummary s;
  s.alpha = m.alpha();
  s.alpha_count = m.dim() - m.rank();
  const double tol = zero_tolerance(m.alpha());
  auto push = [](std::vector<SpectrumRun>& runs, double v) {
    if (!runs.empty() && runs.back().value == v)
      ++runs.back().count;
    else
      runs.push_back({v, 1});
  };
  for (Index i = 0; i < m.rank(); ++i) {
    const double off = m.offsets()(i);
    if (std::abs(off) <= tol)
      ++s.alpha_count;
    else if (off < 0)
      push(s.below, m.eigenvalue(i));
    else
      push(s.above, m.eigenvalue(i));
  }
  return s;
}

Matrix to_dense(const EigenLmMatrix& m) {
  if (m.dim() > 2000) throw GuardExceeded("to_dense: dimension " + std::to_string(m.dim()) + " exceeds 2000");
  Matrix a = m.eigvecs() * m.offsets().asDiagonal() * m.eigvecs().transpose();
  a.diagonal().array() += m.alpha();
  return 0.5 * (a + a.transpose());
}

EigenLmMatrix fold_zero_offsets(const EigenLmMatrix& m) {
  const double tol = zero_tolerance(m.alpha());
  std::vector<Index> keep;
  for (Index i = 0; i < m.rank(); ++i)
    if (std::abs(m.offsets()(i)) > tol) keep.push_back(i);
  if (static_cast<Index>(keep.size()) == m.rank()) return m;
  Matrix e(m.dim(), static_cast<Index>(keep.size()));
  Vector off(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    e.col(static_cast<Index>(j)) = m.eigvecs().col(keep[j]);
    off(static_cast<Index>(j)) = m.offsets()(keep[j]);
  }
  return EigenLmMatrix(m.alpha(), std::move(e), std::move(off));
}

void write_text(std::ostream& os, const EigenLmMatrix& m) {
  const auto old = os.precision(17);
  os << m.dim() << ' ' << m.rank() << ' ' << m.alpha() << '\n';
  for (Index i = 0; i < m.rank(); ++i) os << (i ? " " : "") << m.offsets()(i);
  os << '\n';
  for (Index j = 0; j < m.rank(); ++j) {
    for (Index i = 0; i < m.dim(); ++i) os << (i ? " " : "") << m.eigvecs()(i, j);
    os << '\n';
  }
  os.precision(old);
}

EigenLmMatrix read_text(std::istream& is) {
  long long n = 0, r = 0;
  double alpha = 0.0;
  if (!(is >> n >> r >> alpha)) throw ParseError(1, "expected header \"n r alpha\"");
  if (n < 1 || r < 0 || r > n) throw ParseError(1, "invalid dimensions n=" + std::to_string(n) + " r=" + std::to_string(r));
  Vector off(r);
  for (Index i = 0; i < r; ++i)
    if (!(is >> off(i))) throw ParseError(2, "expected " + std::to_string(r) + " offsets");
  Matrix e(n, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < n; ++i)
      if (!(is >> e(i, j)))
        throw ParseError(static_cast<std::size_t>(3 + j), "expected eigenvector of length " + std::to_string(n));
  if (!std::isfinite(alpha) || !off.allFinite() || !e.allFinite()) throw ParseError(1, "non-finite value");
  return EigenLmMatrix(alpha, std::move(e), std::move(off));
}

}  // namespace lrsqn
