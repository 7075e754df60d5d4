#include "lrsqn/oracle.hpp"

#include "lrsqn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lrsqn::oracle {

namespace {

void check_square(const Matrix& a, Index cap, const char* who) {
  if (a.rows() != a.cols()) throw DimensionMismatch(std::string(who) + ": matrix must be square");
  if (a.rows() > cap) throw GuardExceeded(std::string(who) + ": dimension exceeds " + std::to_string(cap));
}

Eigen::SelfAdjointEigenSolver<Matrix> eig_of(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw NoConvergence("dense eigensolver failed");
  return es;
}

// Optimal value and loss for a window of plain eigenvalues.
std::pair<double, double> window_fit(const double* v, Index len, Measure measure) {
  double sum = 0.0, inv = 0.0;
  for (Index i = 0; i < len; ++i) {
    sum += v[i];
    if (requires_positive(measure)) inv += 1.0 / v[i];
  }
  const auto cnt = static_cast<double>(len);
  double lambda = 0.0;
  switch (measure) {
    case Measure::L2: lambda = 0.5 * (v[0] + v[len - 1]); break;
    case Measure::Frobenius:
    case Measure::InverseStein: lambda = sum / cnt; break;
    case Measure::Stein: lambda = cnt / inv; break;
    case Measure::SymmetrizedStein: lambda = std::sqrt(sum / inv); break;
  }
  double loss = 0.0;
  for (Index i = 0; i < len; ++i) {
    const double x = v[i];
    switch (measure) {
      case Measure::L2: loss = std::max(loss, std::abs(x - lambda)); break;
      case Measure::Frobenius: loss += (x - lambda) * (x - lambda); break;
      case Measure::Stein: loss += lambda / x - std::log(lambda / x); break;
      case Measure::InverseStein: loss += x / lambda - std::log(x / lambda); break;
      case Measure::SymmetrizedStein: loss += x / lambda + lambda / x; break;
    }
  }
  return {lambda, loss};
}

}  // namespace

DenseNearest dense_nearest(const Matrix& a, Index m, Measure measure) {
  check_square(a, 200, "dense_nearest");
  if (m < 0) throw InfeasibleWindow("dense_nearest: negative m");
  const Index n = a.rows();
  const auto es = eig_of(a);
  const Vector lam = es.eigenvalues();
  if (requires_positive(measure) && !(lam(0) > 0.0))
    throw PositivityViolation("dense_nearest: " + to_string(measure) + " requires a positive definite matrix");

  DenseNearest out;
  out.eigenvalues = lam;
  if (m >= n) {
    out.matrix = a;
    return out;
  }
  const Index len = n - m;
  bool have = false;
  for (Index l = 0; l <= m; ++l) {
    const auto [lambda, loss] = window_fit(lam.data() + l, len, measure);
    if (!have || loss < out.loss - 1e-12 * std::abs(out.loss)) {
      out.loss = loss;
      out.mean_value = lambda;
      out.start_index = l + 1;
      have = true;
    }
  }
  Vector fitted = lam;
  fitted.segment(out.start_index - 1, len).setConstant(out.mean_value);
  out.matrix = es.eigenvectors() * fitted.asDiagonal() * es.eigenvectors().transpose();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
  return out;
}

Matrix aligned_matrix(const Matrix& a, const Matrix& b) {
  check_square(a, 2000, "aligned_matrix");
  if (b.rows() != a.rows() || b.cols() != a.cols()) throw DimensionMismatch("aligned_matrix: size mismatch");
  const auto ea = eig_of(a);
  const auto eb = eig_of(b);
  Matrix c = ea.eigenvectors() * eb.eigenvalues().asDiagonal() * ea.eigenvectors().transpose();
  return 0.5 * (c + c.transpose());
}

DenseTrustRegion dense_tr_solve(const Matrix& b, const Vector& g, double radius) {
  check_square(b, 200, "dense_tr_solve");
  if (g.size() != b.rows()) throw DimensionMismatch("dense_tr_solve: gradient length");
  const auto es = eig_of(b);
  const Vector lam = es.eigenvalues();
  const Matrix& w = es.eigenvectors();
  const Vector gamma = w.transpose() * g;
  const Index n = lam.size();
  const double lam1 = lam(0);

  auto step_norm = [&](double sigma) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += gamma(i) * gamma(i) / ((lam(i) + sigma) * (lam(i) + sigma));
    return std::sqrt(s);
  };
  auto step = [&](double sigma) {
    Vector c(n);
    for (Index i = 0; i < n; ++i) c(i) = -gamma(i) / (lam(i) + sigma);
    return Vector(w * c);
  };
  auto finish = [&](DenseTrustRegion r) {
    r.model_value = g.dot(r.p) + 0.5 * r.p.dot(b * r.p);
    return r;
  };

  DenseTrustRegion out;
  if (lam1 > 0.0 && step_norm(0.0) <= radius) {
    out.p = step(0.0);
    return finish(out);
  }

  const double scale = std::max({1.0, std::abs(lam(0)), std::abs(lam(n - 1))});
  if (lam1 <= 0.0) {
    double comp = 0.0, pstar = 0.0;
    Vector c = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (lam(i) - lam1 <= 1e-12 * scale) {
        comp += gamma(i) * gamma(i);
      } else {
        c(i) = -gamma(i) / (lam(i) - lam1);
        pstar += c(i) * c(i);
      }
    }
    if (std::sqrt(comp) <= 1e-10 * g.norm() && std::sqrt(pstar) <= radius) {
      c(0) = std::sqrt(radius * radius - pstar);
      out.p = w * c;
      out.sigma = -lam1;
      out.hard_case = true;
      return finish(out);
    }
  }

  double lo = std::max(0.0, -lam1);
  double hi = lo + g.norm() / radius;
  while (step_norm(hi) > radius) hi = lo + 2.0 * (hi - lo);
  for (int it = 0; it < 2000; ++it) {
    if (std::abs(step_norm(hi) - radius) <= 1e-12 * radius) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (step_norm(mid) > radius)
      lo = mid;
    else
      hi = mid;
  }
  out.sigma = hi;
  out.p = step(hi);
  return finish(out);
}

Matrix dense_broyden(const Matrix& b, const Vector& s, const Vector& y, double phi) {
  const double sy = s.dot(y);
  if (sy == 0.0) throw ZeroCurvature("dense_broyden: s^T y = 0");
  const Index n = b.rows();
  Matrix out;
  if (std::abs(phi - 1.0) < 1e-12) {
    const Matrix left = Matrix::Identity(n, n) - (y * s.transpose()) / sy;
    out = left * b * left.transpose() + (y * y.transpose()) / sy;
  } else {
    const Vector bs = b * s;
    const double sbs = s.dot(bs);
    if (sbs == 0.0) throw DegenerateQuadForm("dense_broyden: s^T B s = 0");
    const Vector v = y / sy - bs / sbs;
    out = b - (bs * bs.transpose()) / sbs + (y * y.transpose()) / sy + phi * sbs * (v * v.transpose());
  }
  return 0.5 * (out + out.transpose());
}

Matrix dense_inverse_bfgs(const Matrix& h, const Vector& s, const Vector& y) {
  const double sy = s.dot(y);
  if (!(sy > 0.0)) throw ZeroCurvature("dense_inverse_bfgs: requires s^T y > 0");
  const Index n = h.rows();
  const Matrix left = Matrix::Identity(n, n) - (s * y.transpose()) / sy;
  Matrix out = left * h * left.transpose() + (s * s.transpose()) / sy;
  return 0.5 * (out + out.transpose());
}

double dissimilarity(const Matrix& x, const Matrix& a, Measure measure) {
  if (x.rows() != a.rows() || x.cols() != a.cols() || x.rows() != x.cols())
    throw DimensionMismatch("dissimilarity: size mismatch");
  const auto n = static_cast<double>(x.rows());
  switch (measure) {
    case Measure::Frobenius: return (x - a).norm();
    case Measure::L2: return eig_of(x - a).eigenvalues().cwiseAbs().maxCoeff();
    default: break;
  }
  Eigen::LLT<Matrix> lx(x), la(a);
  if (lx.info() != Eigen::Success || la.info() != Eigen::Success)
    throw PositivityViolation("dissimilarity: Stein losses need positive definite arguments");
  // Generalized eigenvalues of (x, a): the spectrum of x a^-1.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(0.5 * (x + x.transpose()), 0.5 * (a + a.transpose()),
                                                       Eigen::EigenvaluesOnly);
  const Vector mu = ges.eigenvalues();
  double out = 0.0;
  for (Index i = 0; i < mu.size(); ++i) {
    switch (measure) {
      case Measure::Stein: out += mu(i) - std::log(mu(i)); break;
      case Measure::InverseStein: out += 1.0 / mu(i) + std::log(mu(i)); break;
      case Measure::SymmetrizedStein: out += mu(i) + 1.0 / mu(i); break;
      default: break;
    }
  }
  if (measure != Measure::SymmetrizedStein) out -= n;
  return out;
}

}  // namespace lrsqn::oracle
