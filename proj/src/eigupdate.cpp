#include "lrsqn/eigupdate.hpp"

#include "lrsqn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lrsqn {

Index LdltFactors::retained_count() const {
  return static_cast<Index>(std::count(retained.begin(), retained.end(), true));
}

LdltFactors ldlt_pivoted(const Matrix& gram, double nu) {
  const Index r = gram.rows();
  if (gram.cols() != r) throw DimensionMismatch("ldlt_pivoted: Gram matrix must be square");
  LdltFactors f;
  f.perm.resize(static_cast<std::size_t>(r));
  std::iota(f.perm.begin(), f.perm.end(), Index{0});
  f.lower = Matrix::Identity(r, r);
  f.diag = Vector::Zero(r);
  f.retained.assign(static_cast<std::size_t>(r), false);
  if (r == 0) return f;

  Matrix a = gram;
  const double floor = std::max(nu, kRelativePivotFloor * std::max(0.0, gram.diagonal().maxCoeff()));

  for (Index j = 0; j < r; ++j) {
    Index p = j;
    for (Index i = j + 1; i < r; ++i)
      if (a(i, i) > a(p, p)) p = i;
    if (p != j) {
      a.row(j).swap(a.row(p));
      a.col(j).swap(a.col(p));
      std::swap(f.perm[static_cast<std::size_t>(j)], f.perm[static_cast<std::size_t>(p)]);
      f.lower.row(j).head(j).swap(f.lower.row(p).head(j));
    }
    const double piv = a(j, j);
    if (!(piv > floor)) {
      for (Index i = j; i < r; ++i) f.diag(i) = a(i, i);
      return f;
    }
    f.diag(j) = piv;
    f.retained[static_cast<std::size_t>(j)] = true;
    const Index rest = r - j - 1;
    if (rest == 0) break;
    f.lower.col(j).tail(rest) = a.col(j).tail(rest) / piv;
    a.bottomRightCorner(rest, rest).noalias() -= piv * f.lower.col(j).tail(rest) * f.lower.col(j).tail(rest).transpose();
  }
  return f;
}

SymEig sym_eig_small(const Matrix& input) {
  const Index k = input.rows();
  if (input.cols() != k) throw DimensionMismatch("sym_eig_small: matrix must be square");
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(k, k);
  const double norm = a.norm();

  if (norm > 0.0) {
    const double target = 1e-15 * norm;
    bool done = false;
    for (int sweep = 0; sweep < 100 && !done; ++sweep) {
      double off = 0.0;
      for (Index q = 1; q < k; ++q)
        for (Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
      if (std::sqrt(off) <= target) {
        done = true;
        break;
      }
      for (Index p = 0; p + 1 < k; ++p) {
        for (Index q = p + 1; q < k; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          double t;
          if (std::abs(theta) > 1e150)
            t = 0.5 / theta;
          else
            t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (Index i = 0; i < k; ++i) {
            const double aip = a(i, p), aiq = a(i, q);
            a(i, p) = c * aip - s * aiq;
            a(i, q) = s * aip + c * aiq;
          }
          for (Index i = 0; i < k; ++i) {
            const double api = a(p, i), aqi = a(q, i);
            a(p, i) = c * api - s * aqi;
            a(q, i) = s * api + c * aqi;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (Index i = 0; i < k; ++i) {
            const double vip = v(i, p), viq = v(i, q);
            v(i, p) = c * vip - s * viq;
            v(i, q) = s * vip + c * viq;
          }
        }
      }
    }
    if (!done) throw NoConvergence("sym_eig_small: no convergence after 100 sweeps");
  }

  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) < a(y, y); });

  SymEig out;
  out.values.resize(k);
  out.vectors.resize(k, k);
  for (Index j = 0; j < k; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    Vector col = v.col(src);
    const double big = col.cwiseAbs().maxCoeff();
    Index lead = 0;
    while (std::abs(col(lead)) < big * (1.0 - 1e-12)) ++lead;
    if (col(lead) < 0) col = -col;
    out.vectors.col(j) = col;
  }
  return out;
}

EigenLmMatrix recompose(const Matrix& u, const Matrix& c, double alpha, double nu) {
  const Index n = u.rows();
  const Index r = u.cols();
  if (c.rows() != r || c.cols() != r)
    throw DimensionMismatch("recompose: core is " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()) +
                            " but U has " + std::to_string(r) + " columns");
  if (r == 0) return EigenLmMatrix(n, alpha);

  Matrix gram = u.transpose() * u;
  gram = 0.5 * (gram + gram.transpose());
  const LdltFactors f = ldlt_pivoted(gram, nu);
  // More than n independent columns can only be roundoff; pivots are descending.
  const Index k = std::min(f.retained_count(), n);
  if (k == 0) return EigenLmMatrix(n, alpha);

  // First pass: Q1 = U P L^{-T} restricted to the retained block, scaled by D^{-1/2}.
  Matrix q(n, k);
  for (Index j = 0; j < k; ++j) q.col(j) = u.col(f.perm[static_cast<std::size_t>(j)]);
  const Matrix lkk = f.lower.topLeftCorner(k, k);
  lkk.transpose().triangularView<Eigen::UnitUpper>().solveInPlace<Eigen::OnTheRight>(q);
  const Vector sqrt_d = f.diag.head(k).cwiseSqrt();
  q = q * sqrt_d.cwiseInverse().asDiagonal();

  Matrix cp(r, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      cp(i, j) = c(f.perm[static_cast<std::size_t>(i)], f.perm[static_cast<std::size_t>(j)]);
  const Matrix r1 = sqrt_d.asDiagonal() * f.lower.leftCols(k).transpose();
  Matrix core = r1 * cp * r1.transpose();

  // Second pass (CholQR2) restores orthonormality lost to conditioning of U.
  Matrix g2 = q.transpose() * q;
  g2 = 0.5 * (g2 + g2.transpose());
  if ((g2 - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-15) {
    Eigen::LLT<Matrix> llt(g2);
    if (llt.info() == Eigen::Success) {
      const Matrix r2 = llt.matrixU();
      llt.matrixU().solveInPlace<Eigen::OnTheRight>(q);
      core = r2 * core * r2.transpose();
    }
  }
  core = 0.5 * (core + core.transpose());

  const SymEig eig = sym_eig_small(core);
  const double tol = zero_tolerance(alpha);
  std::vector<Index> keep;
  for (Index i = 0; i < k; ++i)
    if (std::abs(eig.values(i)) > tol) keep.push_back(i);
  const Index kept = static_cast<Index>(keep.size());
  Matrix vsel(k, kept);
  Vector off(kept);
  for (Index j = 0; j < kept; ++j) {
    vsel.col(j) = eig.vectors.col(keep[static_cast<std::size_t>(j)]);
    off(j) = eig.values(keep[static_cast<std::size_t>(j)]);
  }
  Matrix e = q * vsel;
  if (kept == 0) return EigenLmMatrix(n, alpha);
  return EigenLmMatrix(alpha, std::move(e), std::move(off));
}

}  // namespace lrsqn
