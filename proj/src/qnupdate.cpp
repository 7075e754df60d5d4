#include "lrsqn/qnupdate.hpp"

#include "lrsqn/eigupdate.hpp"
#include "lrsqn/errors.hpp"

#include <cmath>
#include <string>

namespace lrsqn {

CompactUpdate broyden_update(const EigenLmMatrix& b, const CurvaturePair& pair, double phi) {
  const Index n = b.dim();
  const Index r = b.rank();
  if (pair.s.size() != n || pair.y.size() != n)
    throw DimensionMismatch("broyden_update: pair length differs from dimension " + std::to_string(n));
  if (!std::isfinite(phi)) throw ConfigError("broyden_update: phi must be finite");

  const double sy = pair.s.dot(pair.y);
  if (sy == 0.0) throw ZeroCurvature("broyden_update: s^T y = 0");
  const Vector bs = matvec(b, pair.s);
  const double sbs = pair.s.dot(bs);

  CompactUpdate out;
  out.alpha = b.alpha();
  out.u.resize(n, r + 2);
  out.u.leftCols(r) = b.eigvecs();
  out.c = Matrix::Zero(r + 2, r + 2);
  out.c.topLeftCorner(r, r).diagonal() = b.offsets();

  if (std::abs(phi - 1.0) < 1e-12) {
    out.u.col(r) = bs;
    out.u.col(r + 1) = pair.y;
    out.c(r, r + 1) = out.c(r + 1, r) = -1.0 / sy;
    out.c(r + 1, r + 1) = (sbs / sy + 1.0) / sy;
    return out;
  }

  if (sbs == 0.0) throw DegenerateQuadForm("broyden_update: s^T B s = 0");
  out.u.col(r) = bs - (sbs * phi / ((phi - 1.0) * sy)) * pair.y;
  out.u.col(r + 1) = pair.y;
  out.c(r, r) = (phi - 1.0) / sbs;
  out.c(r + 1, r + 1) = (1.0 - phi * sbs / (sy * (phi - 1.0))) / sy;
  return out;
}

bool curvature_check(const CurvaturePair& pair, double eps) {
  const double sy = pair.s.dot(pair.y);
  return sy > 0.0 && sy >= eps * pair.s.norm() * pair.y.norm();
}

CompactUpdate inverse_bfgs_update(const EigenLmMatrix& h, const CurvaturePair& pair) {
  if (!(pair.s.dot(pair.y) > 0.0)) throw ZeroCurvature("inverse_bfgs_update: requires s^T y > 0");
  // Inverse BFGS on H is DFP on H with the roles of s and y exchanged.
  return broyden_update(h, CurvaturePair{pair.y, pair.s}, 1.0);
}

EigenLmMatrix apply_update(const CompactUpdate& upd, double nu) { return recompose(upd.u, upd.c, upd.alpha, nu); }

Matrix to_dense(const CompactUpdate& upd) {
  Matrix a = upd.u * upd.c * upd.u.transpose();
  a.diagonal().array() += upd.alpha;
  return 0.5 * (a + a.transpose());
}

}  // namespace lrsqn
