#pragma once

#include "lrsqn/driver.hpp"
#include "lrsqn/reduction.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace lrsqn {

/// f(x) = |C x - d|^2 with d = C * ones, so x* = ones and f(x*) = 0.
struct QuadraticProblem {
  Matrix c;
  Vector d;
};

/// C = U diag(exp(z)) V^T with z ~ N(0,1) and Haar-distributed U, V.
QuadraticProblem gen_random_qp(Index n, std::uint64_t seed);

/// "n" on the first line, then C row by row.
void write_qp(std::ostream& os, const QuadraticProblem& qp);
QuadraticProblem read_qp(std::istream& is);

class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(QuadraticProblem qp);
  Index dim() const override { return qp_.c.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  /// 2 C^T C
  Matrix hessian() const;
  const QuadraticProblem& problem() const { return qp_; }

 private:
  QuadraticProblem qp_;
};

/// f(x) = sum_i a_i (x_i - 1)^2 / 2. Cheap O(n) objective for timing runs.
class DiagonalQuadratic : public Objective {
 public:
  explicit DiagonalQuadratic(Vector a);
  Index dim() const override { return a_.size(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

 private:
  Vector a_;
};

/// Chained Rosenbrock; n = 2 is the classic 100(x2 - x1^2)^2 + (1 - x1)^2.
class Rosenbrock : public Objective {
 public:
  explicit Rosenbrock(Index n = 2);
  Index dim() const override { return n_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

 private:
  Index n_;
};

struct SparseEntry {
  Index index;  // 1-based
  double value;
};

struct SparseRow {
  double label;  // -1 or +1
  std::vector<SparseEntry> features;
};

struct SparseDataset {
  std::vector<SparseRow> rows;
  Index feature_count = 0;
  Index row_count() const { return static_cast<Index>(rows.size()); }
};

/// "label idx:val idx:val ..." per line. Labels 0/-1 map to -1, 1/+1 to +1.
SparseDataset parse_libsvm(std::istream& is);

/// Separable data: labels are the sign of a hidden linear model.
SparseDataset make_separable_dataset(Index samples, Index features, std::uint64_t seed);

/// sum_i log(1 + exp(-y_i a_i^T x)) + ridge/2 |x|^2.
class LogisticObjective : public Objective {
 public:
  LogisticObjective(SparseDataset data, double ridge, Index dim = 0);
  Index dim() const override { return dim_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

 private:
  double margin(const SparseRow& row, const Vector& x) const;
  SparseDataset data_;
  double ridge_;
  Index dim_;
};

struct AggregationOptions {
  Measure measure = Measure::Frobenius;
  double nu = 0.0;
  /// Eigenpair budget of the limited pipeline; <= 0 means min(2m, n).
  Index budget = 0;
  /// Per-component standard deviation of the gradient noise, relative to |g|.
  double noise = 0.01;
  /// Gradient step is step_scale / L with L the largest Hessian eigenvalue.
  double step_scale = 0.1;
  /// Nonzero: shuffle the order of pairs 1..m with this seed.
  std::uint64_t permutation_seed = 0;
};

/// Feeds pairs 1..m and then the aggregated pair 0 to inverse BFGS, once
/// through the eigenpair pipeline and once densely. Returns
/// max |H_lim - H_full| / max |H_full|.
double aggregation_test(Index n, Index m, std::uint64_t seed, const AggregationOptions& opts = {});

}  // namespace lrsqn
