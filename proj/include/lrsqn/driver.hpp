#pragma once

#include "lrsqn/lram.hpp"
#include "lrsqn/qnupdate.hpp"
#include "lrsqn/reduction.hpp"
#include "lrsqn/trsolve.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lrsqn {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
};

struct OptimizerConfig {
  Index m = 5;  // eigenpair budget
  Measure measure = Measure::Frobenius;
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma1 = 0.5;
  double gamma2 = 2.0;
  double tr_eps = 1e-4;
  double curv_eps = 1e-8;
  double nu = 0.0;
  double radius0 = 1.0;
  long max_iter = 1000;
  double grad_tol_abs = 1e-5;
  double grad_tol_rel_grad = 1e-6;
  double grad_tol_rel_f = 1e-6;
  long reduce_every = 1;  // reserved; only 1 is supported
  bool overlap = false;   // reduce concurrently with the trial evaluation

  /// Throws ConfigError.
  void validate(Index n) const;
  /// Sets one key (same names as the fields). Throws ConfigError.
  void set(std::string_view key, std::string_view value);
};

/// key=value lines; '#' starts a comment.
OptimizerConfig load_config(std::istream& is, OptimizerConfig base = {});

struct IterationRecord {
  long k = 0;
  double f = 0.0;
  double gnorm = 0.0;
  double radius = 0.0;  // radius used for this iteration's step
  double sigma = 0.0;
  bool accepted = false;
  double ratio = 0.0;
  Index rank = 0;
  double reduction_loss = 0.0;
  double wall_ms = 0.0;
};

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace);

enum class Status { Converged, MaxIterations, ObjectiveFailure, StructuralSplit };

const char* to_string(Status s);

/// Two-phase stepping: propose() solves the subproblem, finalize() reduces
/// the updated matrix (safe to run while the host evaluates the trial point),
/// commit() applies the ratio test.
class TrustRegionOptimizer {
 public:
  struct Proposal {
    Vector trial;
    SubproblemSolution step;
    double pred = 0.0;
    bool updated = false;  // a curvature pair was applied
  };

  TrustRegionOptimizer(Vector x0, double f0, Vector g0, OptimizerConfig config);

  bool converged() const { return gnorm_ <= tolerance_; }
  double tolerance() const { return tolerance_; }
  long iteration() const { return k_; }
  const Vector& x() const { return x_; }
  double f() const { return f_; }
  const Vector& g() const { return g_; }
  double radius() const { return radius_; }
  /// Matrix at the start of the next iteration (rank <= m).
  const EigenLmMatrix& hessian() const { return b_; }
  /// Updated, unreduced matrix of the current proposal.
  const EigenLmMatrix& updated_hessian() const { return b_hat_; }
  double last_reduction_loss() const { return reduction_loss_; }

  const Proposal& propose();
  void finalize();
  IterationRecord commit(double f_trial, const std::function<Vector()>& gradient_at_trial);

  /// Pair consumed by the next propose(), if any.
  const std::optional<CurvaturePair>& pending_pair() const { return pair_; }

 private:
  OptimizerConfig cfg_;
  Vector x_, g_;
  double f_;
  double gnorm_;
  double tolerance_;
  double radius_;
  long k_ = 0;
  EigenLmMatrix b_, b_hat_, b_next_;
  std::optional<CurvaturePair> pair_;
  Proposal prop_;
  bool proposed_ = false;
  bool finalized_ = false;
  double reduction_loss_ = 0.0;
};

using IterationObserver = std::function<void(const IterationRecord&, const TrustRegionOptimizer&)>;

struct MinimizeResult {
  Vector x;
  double f = 0.0;
  double gnorm = 0.0;
  Status status = Status::MaxIterations;
  std::string message;
  std::vector<IterationRecord> trace;  // row 0 is the starting point
  EigenLmMatrix hessian;
  std::map<std::string, std::string> metadata;
};

MinimizeResult minimize(const Objective& obj, const Vector& x0, const OptimizerConfig& config,
                        const IterationObserver& observer = {});

struct EquivalenceReport {
  MinimizeResult result;
  /// |B_eig - B_dense|_F / |B_dense|_F after each iteration.
  std::vector<double> relative_errors;
};

/// Runs minimize with a budget that never binds and tracks dense BFGS alongside.
EquivalenceReport full_memory_equivalence_mode(const Objective& obj, const Vector& x0, const OptimizerConfig& config);

}  // namespace lrsqn
