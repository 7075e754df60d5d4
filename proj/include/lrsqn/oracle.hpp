#pragma once

// Dense reference implementations. O(n^3) and size-capped; meant for tests
// and the CLI's --verify paths.

#include "lrsqn/lram.hpp"
#include "lrsqn/reduction.hpp"

namespace lrsqn::oracle {

struct DenseNearest {
  Matrix matrix;
  double loss = 0.0;
  Index start_index = 1;
  double mean_value = 0.0;
  Vector eigenvalues;  // of the input, ascending
};

/// Exhaustive scan over all m+1 windows of the dense spectrum. n <= 200.
DenseNearest dense_nearest(const Matrix& a, Index m, Measure measure);

/// Eigenvectors of a with the sorted eigenvalues of b, paired ascending.
Matrix aligned_matrix(const Matrix& a, const Matrix& b);

struct DenseTrustRegion {
  double sigma = 0.0;
  Vector p;
  double model_value = 0.0;  // g^T p + p^T B p / 2
  bool hard_case = false;
};

/// Eigendecomposition plus bisection on sigma. n <= 200.
DenseTrustRegion dense_tr_solve(const Matrix& b, const Vector& g, double radius);

/// Broyden class; phi == 1 uses the DFP product form.
Matrix dense_broyden(const Matrix& b, const Vector& s, const Vector& y, double phi);

/// (I - rho s y^T) H (I - rho y s^T) + rho s s^T.
Matrix dense_inverse_bfgs(const Matrix& h, const Vector& s, const Vector& y);

/// Matrix-level dissimilarity d(x, a). For the Stein family the eigenvalue
/// losses of reduction correspond to:
///   Stein:            tr(x a^-1) - logdet(x a^-1) - n
///   InverseStein:     tr(a x^-1) - logdet(a x^-1) - n
///   SymmetrizedStein: tr(x a^-1) + tr(a x^-1)
/// L2 and Frobenius are the spectral and Frobenius norms of x - a.
double dissimilarity(const Matrix& x, const Matrix& a, Measure measure);

}  // namespace lrsqn::oracle
