#pragma once

#include "lrsqn/lram.hpp"

#include <vector>

namespace lrsqn {

/// P^T G P = L D L^T with largest-remaining-diagonal pivoting.
///
/// perm[j] is the original index placed at position j. Positions are
/// retained up to the first pivot at or below the drop threshold; everything
/// after it is dropped, and diag holds the remaining Schur diagonal there.
struct LdltFactors {
  std::vector<Index> perm;
  Matrix lower;
  Vector diag;
  std::vector<bool> retained;

  Index retained_count() const;
};

/// Pivots are dropped when <= max(nu, kRelativePivotFloor * max diag(G)).
inline constexpr double kRelativePivotFloor = 1e-15;

LdltFactors ldlt_pivoted(const Matrix& gram, double nu);

struct SymEig {
  Matrix vectors;
  Vector values;  // ascending
};

/// Cyclic Jacobi. Each eigenvector's largest-magnitude entry is positive.
SymEig sym_eig_small(const Matrix& a);

/// Eigenpair form of alpha*I + U C U^T, truncated to the numerical rank of U.
EigenLmMatrix recompose(const Matrix& u, const Matrix& c, double alpha, double nu = 0.0);

}  // namespace lrsqn
