#include "lrsqn/problems.hpp"

#include "lrsqn/eigupdate.hpp"
#include "lrsqn/errors.hpp"
#include "lrsqn/oracle.hpp"
#include "lrsqn/qnupdate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace lrsqn {

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  return a;
}

// Q from the QR of a Gaussian matrix, with R's diagonal made positive.
Matrix haar_orthogonal(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

QuadraticProblem gen_random_qp(Index n, std::uint64_t seed) {
  if (n < 2) throw DimensionMismatch("gen_random_qp: n must be at least 2");
  std::mt19937_64 rng(seed);
  const Matrix u = haar_orthogonal(n, rng);
  const Matrix v = haar_orthogonal(n, rng);
  std::normal_distribution<double> normal;
  Vector sv(n);
  for (Index i = 0; i < n; ++i) sv(i) = std::exp(normal(rng));
  QuadraticProblem qp;
  qp.c = u * sv.asDiagonal() * v.transpose();
  qp.d = qp.c * Vector::Ones(n);
  return qp;
}

void write_qp(std::ostream& os, const QuadraticProblem& qp) {
  const auto old = os.precision(17);
  os << qp.c.rows() << '\n';
  for (Index i = 0; i < qp.c.rows(); ++i) {
    for (Index j = 0; j < qp.c.cols(); ++j) os << (j ? " " : "") << qp.c(i, j);
    os << '\n';
  }
  os.precision(old);
}

QuadraticProblem read_qp(std::istream& is) {
  long long n = 0;
  if (!(is >> n) || n < 1) throw ParseError(1, "expected positive dimension");
  QuadraticProblem qp;
  qp.c.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(is >> qp.c(i, j))) throw ParseError(static_cast<std::size_t>(2 + i), "expected " + std::to_string(n) + " values");
  qp.d = qp.c * Vector::Ones(n);
  return qp;
}

QuadraticObjective::QuadraticObjective(QuadraticProblem qp) : qp_(std::move(qp)) {
  if (qp_.c.rows() != qp_.d.size()) throw DimensionMismatch("QuadraticObjective: C and d disagree");
}

double QuadraticObjective::value(const Vector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("QuadraticObjective::value: wrong length");
  return (qp_.c * x - qp_.d).squaredNorm();
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("QuadraticObjective::gradient: wrong length");
  return 2.0 * (qp_.c.transpose() * (qp_.c * x - qp_.d));
}

Matrix QuadraticObjective::hessian() const { return 2.0 * qp_.c.transpose() * qp_.c; }

DiagonalQuadratic::DiagonalQuadratic(Vector a) : a_(std::move(a)) {
  if (a_.size() < 1) throw DimensionMismatch("DiagonalQuadratic: empty");
}

double DiagonalQuadratic::value(const Vector& x) const {
  return 0.5 * (a_.array() * (x.array() - 1.0).square()).sum();
}

Vector DiagonalQuadratic::gradient(const Vector& x) const { return (a_.array() * (x.array() - 1.0)).matrix(); }

Rosenbrock::Rosenbrock(Index n) : n_(n) {
  if (n < 2) throw DimensionMismatch("Rosenbrock: n must be at least 2");
}

double Rosenbrock::value(const Vector& x) const {
  double f = 0.0;
  for (Index i = 0; i + 1 < n_; ++i) {
    const double a = x(i + 1) - x(i) * x(i), b = 1.0 - x(i);
    f += 100.0 * a * a + b * b;
  }
  return f;
}

Vector Rosenbrock::gradient(const Vector& x) const {
  Vector g = Vector::Zero(n_);
  for (Index i = 0; i + 1 < n_; ++i) {
    const double a = x(i + 1) - x(i) * x(i);
    g(i) += -400.0 * x(i) * a - 2.0 * (1.0 - x(i));
    g(i + 1) += 200.0 * a;
  }
  return g;
}

SparseDataset parse_libsvm(std::istream& is) {
  SparseDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    SparseRow row;
    std::size_t used = 0;
    double label = 0.0;
    try {
      label = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw ParseError(lineno, "bad label '" + tok + "'");
    if (label == 1.0)
      row.label = 1.0;
    else if (label == 0.0 || label == -1.0)
      row.label = -1.0;
    else
      throw ParseError(lineno, "label must be -1, 0 or 1, got '" + tok + "'");

    Index last = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError(lineno, "expected index:value, got '" + tok + "'");
      long long idx = 0;
      double val = 0.0;
      try {
        std::size_t a = 0, b = 0;
        idx = std::stoll(tok.substr(0, colon), &a);
        val = std::stod(tok.substr(colon + 1), &b);
        if (a != colon || b != tok.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(lineno, "malformed feature '" + tok + "'");
      }
      if (idx < 1) throw ParseError(lineno, "feature index must be >= 1");
      if (idx <= last)
        throw NonAscendingIndex(lineno, "feature index " + std::to_string(idx) + " after " + std::to_string(last));
      last = idx;
      row.features.push_back({static_cast<Index>(idx), val});
    }
    ds.feature_count = std::max(ds.feature_count, last);
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

SparseDataset make_separable_dataset(Index samples, Index features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector w(features);
  for (Index j = 0; j < features; ++j) w(j) = normal(rng);
  const double scale = 1.0 / std::sqrt(static_cast<double>(features));
  SparseDataset ds;
  ds.feature_count = features;
  for (Index i = 0; i < samples; ++i) {
    SparseRow row;
    double dot = 0.0;
    for (Index j = 0; j < features; ++j) {
      const double v = scale * normal(rng);
      row.features.push_back({j + 1, v});
      dot += v * w(j);
    }
    row.label = dot >= 0 ? 1.0 : -1.0;
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

LogisticObjective::LogisticObjective(SparseDataset data, double ridge, Index dim)
    : data_(std::move(data)), ridge_(ridge), dim_(dim > 0 ? dim : data_.feature_count) {
  if (dim_ < data_.feature_count)
    throw DimensionMismatch("LogisticObjective: dimension smaller than the dataset's feature count");
  if (dim_ < 1) throw DimensionMismatch("LogisticObjective: empty feature space");
  if (!(ridge_ >= 0.0)) throw ConfigError("LogisticObjective: ridge must be non-negative");
}

double LogisticObjective::margin(const SparseRow& row, const Vector& x) const {
  double s = 0.0;
  for (const auto& e : row.features) s += e.value * x(e.index - 1);
  return row.label * s;
}

double LogisticObjective::value(const Vector& x) const {
  if (x.size() != dim_) throw DimensionMismatch("LogisticObjective::value: wrong length");
  double f = 0.5 * ridge_ * x.squaredNorm();
  for (const auto& row : data_.rows) f += softplus(-margin(row, x));
  return f;
}

Vector LogisticObjective::gradient(const Vector& x) const {
  if (x.size() != dim_) throw DimensionMismatch("LogisticObjective::gradient: wrong length");
  Vector g = ridge_ * x;
  for (const auto& row : data_.rows) {
    const double w = -row.label * sigmoid(-margin(row, x));
    for (const auto& e : row.features) g(e.index - 1) += w * e.value;
  }
  return g;
}

double aggregation_test(Index n, Index m, std::uint64_t seed, const AggregationOptions& opts) {
  if (m < 1 || m > n) throw ConfigError("aggregation_test: need 1 <= m <= n");
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::normal_distribution<double> normal;

  // n = 1 has no Haar construction worth the name; a positive scalar suffices.
  Matrix hess;
  if (n == 1) {
    hess = Matrix::Constant(1, 1, 2.0 * std::exp(2.0 * normal(rng)));
  } else {
    hess = QuadraticObjective(gen_random_qp(n, seed)).hessian();
    hess = 0.5 * (hess + hess.transpose());
  }
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(hess, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = opts.step_scale / lmax;

  std::vector<CurvaturePair> pairs;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = normal(rng);
  for (Index i = 0; i < m; ++i) {
    const Vector g = hess * (x - Vector::Ones(n));
    bool ok = false;
    for (int attempt = 0; attempt <= 10 && !ok; ++attempt) {
      Vector noisy = g;
      const double sd = opts.noise * g.norm();
      for (Index j = 0; j < n; ++j) noisy(j) += sd * normal(rng);
      Vector s = -step * noisy;
      Vector y = hess * s;
      if (s.dot(y) > 0.0) {
        x += s;
        pairs.push_back({std::move(s), std::move(y)});
        ok = true;
      }
    }
    if (!ok) throw ZeroCurvature("aggregation_test: no pair with positive curvature after 10 retries");
  }

  CurvaturePair p0{Vector::Zero(n), Vector::Zero(n)};
  for (const auto& p : pairs) p0.s += normal(rng) * p.s;
  p0.y = hess * p0.s;
  if (!(p0.s.dot(p0.y) > 0.0)) throw ZeroCurvature("aggregation_test: aggregated pair has no curvature");

  if (opts.permutation_seed != 0) {
    std::mt19937_64 prng(opts.permutation_seed);
    std::shuffle(pairs.begin(), pairs.end(), prng);
  }
  pairs.push_back(std::move(p0));

  const Index budget = opts.budget > 0 ? opts.budget : std::min<Index>(2 * m, n);
  EigenLmMatrix h_lim(n, 1.0);
  Matrix h_full = Matrix::Identity(n, n);
  for (const auto& p : pairs) {
    h_lim = apply_update(inverse_bfgs_update(h_lim, p), opts.nu);
    if (h_lim.rank() > budget) h_lim = reduce(h_lim, budget, opts.measure).matrix;
    h_full = oracle::dense_inverse_bfgs(h_full, p.s, p.y);
  }
  return (to_dense(h_lim) - h_full).cwiseAbs().maxCoeff() / h_full.cwiseAbs().maxCoeff();
}

}  // namespace lrsqn
