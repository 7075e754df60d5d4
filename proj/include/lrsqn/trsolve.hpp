#pragma once

#include "lrsqn/lram.hpp"

#include <cstdint>

namespace lrsqn {

struct ProjectedGradient {
  Vector h;                  // E^T g
  double g_perp_norm = 0.0;  // |g - E h|
  Vector g;
};

ProjectedGradient project_gradient(const EigenLmMatrix& b, const Vector& g);

/// |p(sigma)| for p(sigma) = -(B + sigma I)^{-1} g, from scalars only.
double p_norm(double sigma, double alpha, const Vector& offsets, const ProjectedGradient& pg);

/// p(sigma)^T (B + sigma I)^{-1} p(sigma).
double p_quadform(double sigma, double alpha, const Vector& offsets, const ProjectedGradient& pg);

enum class StepKind { Interior, Boundary, HardCase };

const char* to_string(StepKind k);

struct SubproblemSolution {
  double sigma = 0.0;
  Vector p;
  StepKind kind = StepKind::Interior;
  double model_decrease = 0.0;  // -(g^T p + p^T B p / 2)
  int newton_iterations = 0;
};

inline constexpr std::uint64_t kHardCaseSeed = 0x9e3779b97f4a7c15ULL;

/// min g^T p + p^T B p / 2 subject to |p| <= radius.
SubproblemSolution solve_subproblem(const EigenLmMatrix& b, const Vector& g, double radius, double eps = 1e-4);

}  // namespace lrsqn
