#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace lrsqn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Offsets with magnitude at or below this are treated as part of the shift.
double zero_tolerance(double alpha);

/// Symmetric matrix alpha*I + E*diag(offsets)*E^T with column-orthonormal E.
///
/// Offsets are eigenvalue minus alpha. Eigenpairs are kept sorted by
/// eigenvalue ascending; the constructor reorders columns accordingly.
class EigenLmMatrix {
 public:
  EigenLmMatrix() = default;
  EigenLmMatrix(Index n, double alpha);
  EigenLmMatrix(double alpha, Matrix eigvecs, Vector offsets);

  Index dim() const { return eigvecs_.rows(); }
  Index rank() const { return offsets_.size(); }
  double alpha() const { return alpha_; }
  const Matrix& eigvecs() const { return eigvecs_; }
  const Vector& offsets() const { return offsets_; }
  double eigenvalue(Index i) const { return alpha_ + offsets_(i); }

  /// max |E^T E - I| entry.
  double orthonormality_error() const;

 private:
  double alpha_ = 0.0;
  Matrix eigvecs_;
  Vector offsets_;
};

struct SpectrumRun {
  double value;
  Index count;
};

/// Sorted eigenvalue multiset in run-length form.
struct SpectrumSummary {
  double alpha = 0.0;
  std::vector<SpectrumRun> below;
  Index alpha_count = 0;
  std::vector<SpectrumRun> above;

  Index size() const;
  /// All runs ascending; the alpha run is included only when alpha_count > 0.
  std::vector<SpectrumRun> runs() const;
  double min() const;
  double max() const;
};

Vector matvec(const EigenLmMatrix& m, const Vector& x);
SpectrumSummary spectrum(const EigenLmMatrix& m);

/// Dense alpha*I + E diag(offsets) E^T. Refuses n > 2000.
Matrix to_dense(const EigenLmMatrix& m);

/// Drops eigenpairs whose offset is within zero_tolerance(alpha).
EigenLmMatrix fold_zero_offsets(const EigenLmMatrix& m);

/// Text format: "n r alpha", then r offsets, then r columns of length n.
void write_text(std::ostream& os, const EigenLmMatrix& m);
EigenLmMatrix read_text(std::istream& is);

}  // namespace lrsqn
