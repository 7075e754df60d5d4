#include "lrsqn/trsolve.hpp"

#include "lrsqn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace lrsqn {

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Interior: return "interior";
    case StepKind::Boundary: return "boundary";
    case StepKind::HardCase: return "hard";
  }
  return "?";
}

ProjectedGradient project_gradient(const EigenLmMatrix& b, const Vector& g) {
  if (g.size() != b.dim()) throw DimensionMismatch("project_gradient: gradient length differs from dimension");
  ProjectedGradient pg;
  pg.g = g;
  if (b.rank() == 0) {
    pg.h = Vector(0);
    pg.g_perp_norm = g.norm();
    return pg;
  }
  pg.h = b.eigvecs().transpose() * g;
  // g fully inside span(E) leaves nothing in the shift eigenspace.
  pg.g_perp_norm = b.rank() == b.dim() ? 0.0 : (g - b.eigvecs() * pg.h).norm();
  return pg;
}

namespace {

double shifted_sum(double sigma, double alpha, const Vector& offsets, const ProjectedGradient& pg, int power) {
  if (offsets.size() != pg.h.size()) throw DimensionMismatch("p_norm: offsets and h differ in length");
  double sum = 0.0;
  if (pg.g_perp_norm > 0.0) {
    const double den = alpha + sigma;
    if (!(den > 0.0)) throw SingularShift("alpha + sigma = " + std::to_string(den) + " is not positive");
    sum += pg.g_perp_norm * pg.g_perp_norm / std::pow(den, power);
  }
  for (Index i = 0; i < offsets.size(); ++i) {
    const double den = alpha + sigma + offsets(i);
    if (!(den > 0.0)) throw SingularShift("alpha + sigma + offset = " + std::to_string(den) + " is not positive");
    sum += pg.h(i) * pg.h(i) / std::pow(den, power);
  }
  return sum;
}

// p = -(B + sigma I)^+ g, skipping directions flagged in `skip` (and the
// shift eigenspace when skip_alpha is set).
Vector assemble(const EigenLmMatrix& b, const ProjectedGradient& pg, double sigma, const std::vector<bool>& skip,
                bool skip_alpha) {
  const Index r = b.rank();
  Vector coef = Vector::Zero(r);
  for (Index i = 0; i < r; ++i)
    if (!skip[static_cast<std::size_t>(i)]) coef(i) = pg.h(i) / (b.alpha() + sigma + b.offsets()(i));
  Vector p = Vector::Zero(b.dim());
  if (!skip_alpha && pg.g_perp_norm > 0.0) {
    p = pg.g;
    if (r > 0) p.noalias() -= b.eigvecs() * pg.h;
    p /= -(b.alpha() + sigma);
  }
  if (r > 0) p.noalias() -= b.eigvecs() * coef;
  return p;
}

double newton_sigma(double sigma, double target, double alpha, const Vector& offsets, const ProjectedGradient& pg,
                    double pn) {
  const double q = shifted_sum(sigma, alpha, offsets, pg, 3);
  return sigma + (pn * pn / q) * ((pn - target) / target);
}

double model_decrease(const EigenLmMatrix& b, const Vector& g, const Vector& p) {
  return -(g.dot(p) + 0.5 * p.dot(matvec(b, p)));
}

}  // namespace

double p_norm(double sigma, double alpha, const Vector& offsets, const ProjectedGradient& pg) {
  return std::sqrt(shifted_sum(sigma, alpha, offsets, pg, 2));
}

double p_quadform(double sigma, double alpha, const Vector& offsets, const ProjectedGradient& pg) {
  return shifted_sum(sigma, alpha, offsets, pg, 3);
}

SubproblemSolution solve_subproblem(const EigenLmMatrix& b, const Vector& g, double radius, double eps) {
  if (!(radius > 0.0)) throw ConfigError("solve_subproblem: radius must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("solve_subproblem: eps must lie in (0, 1)");
  const ProjectedGradient pg = project_gradient(b, g);
  const double alpha = b.alpha();
  const Vector& off = b.offsets();
  const Index r = b.rank();
  const SpectrumSummary spec = spectrum(b);
  const double lambda1 = spec.min();
  const double gnorm = g.norm();
  const std::vector<bool> none(static_cast<std::size_t>(r), false);

  SubproblemSolution sol;
  if (lambda1 > 0.0 && p_norm(0.0, alpha, off, pg) <= radius) {
    sol.kind = StepKind::Interior;
    sol.sigma = 0.0;
    sol.p = assemble(b, pg, 0.0, none, false);
    sol.model_decrease = model_decrease(b, g, sol.p);
    return sol;
  }

  const double sigma_low = std::max(0.0, -lambda1);

  if (lambda1 <= 0.0) {
    // Components of g in the lambda1 eigenspace decide whether the hard case applies.
    const double eig_tol = 1e-12 * std::max({1.0, std::abs(spec.min()), std::abs(spec.max())});
    std::vector<bool> in_min(static_cast<std::size_t>(r), false);
    double comp2 = 0.0;
    Index first_explicit = -1;
    for (Index i = 0; i < r; ++i) {
      if (std::abs(alpha + off(i) - lambda1) <= eig_tol) {
        in_min[static_cast<std::size_t>(i)] = true;
        comp2 += pg.h(i) * pg.h(i);
        if (first_explicit < 0) first_explicit = i;
      }
    }
    const bool alpha_in = r < b.dim() && std::abs(alpha - lambda1) <= eig_tol;
    if (alpha_in) comp2 += pg.g_perp_norm * pg.g_perp_norm;

    if (std::sqrt(comp2) <= 1e-10 * gnorm || gnorm == 0.0) {
      double pstar2 = 0.0;
      for (Index i = 0; i < r; ++i)
        if (!in_min[static_cast<std::size_t>(i)]) {
          const double den = alpha + off(i) - lambda1;
          pstar2 += pg.h(i) * pg.h(i) / (den * den);
        }
      if (!alpha_in && pg.g_perp_norm > 0.0) pstar2 += std::pow(pg.g_perp_norm / (alpha - lambda1), 2);

      if (std::sqrt(pstar2) <= radius) {
        Vector pstar = assemble(b, pg, -lambda1, in_min, alpha_in);
        Vector z;
        if (first_explicit >= 0) {
          z = b.eigvecs().col(first_explicit);
        } else {
          std::mt19937_64 rng(kHardCaseSeed);
          std::normal_distribution<double> normal;
          for (int attempt = 0; attempt < 10; ++attempt) {
            z = Vector::NullaryExpr(b.dim(), [&](Index) { return normal(rng); });
            const double before = z.norm();
            for (int pass = 0; pass < 2 && r > 0; ++pass) z -= b.eigvecs() * (b.eigvecs().transpose() * z);
            if (z.norm() > 1e-8 * before) break;
          }
          z.normalize();
        }
        const double tau_abs = std::sqrt(std::max(0.0, radius * radius - pstar.squaredNorm())) / z.norm();
        const double tau = g.dot(z) > 0.0 ? -tau_abs : tau_abs;
        sol.kind = StepKind::HardCase;
        sol.sigma = -lambda1;
        sol.p = pstar + tau * z;
        sol.model_decrease = model_decrease(b, g, sol.p);
        return sol;
      }
    }
  }

  // Boundary: safeguarded Newton on 1/Delta - 1/|p(sigma)| with Delta = radius/(1+eps).
  const double delta = radius / (1.0 + eps);
  double sigma = sigma_low + gnorm / radius;
  double pn = p_norm(sigma, alpha, off, pg);
  int it = 0;
  for (; std::abs(pn - delta) / delta > eps; ++it) {
    if (it >= 200)
      throw MaxIterations("solve_subproblem: sigma iteration did not converge in 200 steps (sigma=" +
                          std::to_string(sigma) + ")");
    const double trial = newton_sigma(sigma, delta, alpha, off, pg, pn);
    sigma = trial <= sigma_low ? 0.5 * (sigma + sigma_low) : trial;
    pn = p_norm(sigma, alpha, off, pg);
  }

  // Refinement toward the radius itself; only feasible iterates are kept.
  const double target = radius * (1.0 - 1e-9);
  double best_sigma = sigma, best_pn = pn;
  for (int k = 0; k < 10 && best_pn < target; ++k) {
    const double trial = newton_sigma(sigma, target, alpha, off, pg, pn);
    sigma = trial <= sigma_low ? 0.5 * (sigma + sigma_low) : trial;
    pn = p_norm(sigma, alpha, off, pg);
    if (pn <= radius && pn > best_pn) {
      best_sigma = sigma;
      best_pn = pn;
    }
  }

  sol.kind = StepKind::Boundary;
  sol.sigma = best_sigma;
  sol.newton_iterations = it;
  sol.p = assemble(b, pg, best_sigma, none, false);
  sol.model_decrease = model_decrease(b, g, sol.p);
  return sol;
}

}  // namespace lrsqn
