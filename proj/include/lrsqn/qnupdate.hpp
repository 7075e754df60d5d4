#pragma once

#include "lrsqn/lram.hpp"

namespace lrsqn {

struct CurvaturePair {
  Vector s;  // iterate difference
  Vector y;  // gradient difference
};

/// alpha*I + u*c*u^T, not yet in eigenpair form.
struct CompactUpdate {
  double alpha = 0.0;
  Matrix u;
  Matrix c;
};

/// Broyden-class update with parameter phi (0 = BFGS, 1 = DFP).
CompactUpdate broyden_update(const EigenLmMatrix& b, const CurvaturePair& pair, double phi);

/// True iff s^T y >= eps * |s| |y| and s^T y > 0.
bool curvature_check(const CurvaturePair& pair, double eps);

/// Inverse BFGS: (I - rho s y^T) H (I - rho y s^T) + rho s s^T.
CompactUpdate inverse_bfgs_update(const EigenLmMatrix& h, const CurvaturePair& pair);

/// Eigenpair form of the update (recompose with threshold nu).
EigenLmMatrix apply_update(const CompactUpdate& upd, double nu = 0.0);

Matrix to_dense(const CompactUpdate& upd);

}  // namespace lrsqn
