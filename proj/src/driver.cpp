#include "lrsqn/driver.hpp"

#include "lrsqn/errors.hpp"
#include "lrsqn/oracle.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace lrsqn {

namespace {

double parse_double(std::string_view key, std::string_view text) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("config key '" + std::string(key) + "': not a number: '" + s + "'");
  return v;
}

long parse_long(std::string_view key, std::string_view text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e15)
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + std::string(text) + "'");
  return static_cast<long>(v);
}

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void OptimizerConfig::validate(Index n) const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (m < 1) fail("m must be at least 1 (got " + std::to_string(m) + ")");
  if (!(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0)) fail("need 0 < eta1 < eta2 < 1");
  if (!(0.0 < gamma1 && gamma1 < 1.0 && gamma2 > 1.0)) fail("need 0 < gamma1 < 1 < gamma2");
  if (!(0.0 < tr_eps && tr_eps < 1.0)) fail("tr_eps must lie in (0, 1)");
  if (!(curv_eps >= 0.0)) fail("curv_eps must be non-negative");
  if (!(nu >= 0.0)) fail("nu must be non-negative");
  if (!(radius0 > 0.0)) fail("radius0 must be positive");
  if (max_iter < 0) fail("max_iter must be non-negative");
  if (!(grad_tol_abs >= 0.0 && grad_tol_rel_grad >= 0.0 && grad_tol_rel_f >= 0.0))
    fail("gradient tolerances must be non-negative");
  if (reduce_every != 1) fail("reduce_every is reserved; only 1 is supported");
  if (n < 1) fail("problem dimension must be positive");
  // The shift block is provably kept whole only above these sizes (two new
  // eigenpairs per iteration). A budget of at least n never reduces.
  if (m < n) {
    const std::string mm = std::to_string(m), nn = std::to_string(n);
    if (measure == Measure::L2 && !(n > 2 * m + 2)) fail("l2 needs n > 2m+2 (n=" + nn + ", m=" + mm + ")");
    if (measure == Measure::Frobenius && !(n >= 2 * m + 4)) fail("fro needs n >= 2m+4 (n=" + nn + ", m=" + mm + ")");
    if (measure == Measure::SymmetrizedStein && !(n >= 3 * m + 4))
      fail("sstein needs n >= 3m+4 (n=" + nn + ", m=" + mm + ")");
  }
}

void OptimizerConfig::set(std::string_view key, std::string_view value) {
  if (key == "m") m = parse_long(key, value);
  else if (key == "measure") measure = parse_measure(value);
  else if (key == "eta1") eta1 = parse_double(key, value);
  else if (key == "eta2") eta2 = parse_double(key, value);
  else if (key == "gamma1") gamma1 = parse_double(key, value);
  else if (key == "gamma2") gamma2 = parse_double(key, value);
  else if (key == "tr_eps" || key == "eps") tr_eps = parse_double(key, value);
  else if (key == "curv_eps") curv_eps = parse_double(key, value);
  else if (key == "nu") nu = parse_double(key, value);
  else if (key == "radius0" || key == "d0") radius0 = parse_double(key, value);
  else if (key == "max_iter") max_iter = parse_long(key, value);
  else if (key == "grad_tol_abs") grad_tol_abs = parse_double(key, value);
  else if (key == "grad_tol_rel_grad") grad_tol_rel_grad = parse_double(key, value);
  else if (key == "grad_tol_rel_f") grad_tol_rel_f = parse_double(key, value);
  else if (key == "reduce_every") reduce_every = parse_long(key, value);
  else if (key == "overlap") {
    if (value == "1" || value == "true") overlap = true;
    else if (value == "0" || value == "false") overlap = false;
    else throw ConfigError("config key 'overlap': expected true/false");
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

OptimizerConfig load_config(std::istream& is, OptimizerConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv(line);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    base.set(trim(sv.substr(0, eq)), trim(sv.substr(eq + 1)));
  }
  return base;
}

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
  const auto old = os.precision(17);
  os << "iter,f,gnorm,radius,sigma,accepted,ratio,rank,reduction_loss,wall_ms\n";
  for (const auto& r : trace)
    os << r.k << ',' << r.f << ',' << r.gnorm << ',' << r.radius << ',' << r.sigma << ',' << (r.accepted ? 1 : 0)
       << ',' << r.ratio << ',' << r.rank << ',' << r.reduction_loss << ',' << r.wall_ms << '\n';
  os.precision(old);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max_iterations";
    case Status::ObjectiveFailure: return "objective_failure";
    case Status::StructuralSplit: return "structural_split";
  }
  return "?";
}

TrustRegionOptimizer::TrustRegionOptimizer(Vector x0, double f0, Vector g0, OptimizerConfig config)
    : cfg_(config), x_(std::move(x0)), g_(std::move(g0)), f_(f0), radius_(config.radius0) {
  if (g_.size() != x_.size()) throw DimensionMismatch("optimizer: gradient and point differ in length");
  cfg_.validate(x_.size());
  if (!std::isfinite(f_) || !g_.allFinite()) throw ObjectiveFailure("non-finite value or gradient at the start point");
  gnorm_ = g_.norm();
  tolerance_ = std::max({cfg_.grad_tol_abs, cfg_.grad_tol_rel_grad * gnorm_, cfg_.grad_tol_rel_f * std::abs(f_)});
  b_ = EigenLmMatrix(x_.size(), 1.0);
}

const TrustRegionOptimizer::Proposal& TrustRegionOptimizer::propose() {
  prop_ = Proposal{};
  b_hat_ = b_;
  if (pair_ && curvature_check(*pair_, cfg_.curv_eps)) {
    try {
      b_hat_ = apply_update(broyden_update(b_, *pair_, 0.0), cfg_.nu);
      prop_.updated = true;
    } catch (const ZeroCurvature&) {
    } catch (const DegenerateQuadForm&) {
    }
  }
  pair_.reset();
  prop_.step = solve_subproblem(b_hat_, g_, radius_, cfg_.tr_eps);
  prop_.trial = x_ + prop_.step.p;
  prop_.pred = -prop_.step.model_decrease;
  proposed_ = true;
  finalized_ = false;
  return prop_;
}

void TrustRegionOptimizer::finalize() {
  if (!proposed_) throw Error("finalize() called before propose()");
  if (finalized_) return;
  if (b_hat_.rank() > cfg_.m) {
    Reduction red = reduce(b_hat_, cfg_.m, cfg_.measure);
    b_next_ = std::move(red.matrix);
    reduction_loss_ = red.selection.loss;
  } else {
    b_next_ = b_hat_;
    reduction_loss_ = 0.0;
  }
  finalized_ = true;
}

IterationRecord TrustRegionOptimizer::commit(double f_trial, const std::function<Vector()>& gradient_at_trial) {
  if (!proposed_) throw Error("commit() called before propose()");
  finalize();
  IterationRecord rec;
  rec.radius = radius_;
  rec.sigma = prop_.step.sigma;
  const double ared = f_trial - f_;
  rec.ratio = prop_.pred < 0.0 ? ared / prop_.pred : -std::numeric_limits<double>::infinity();
  rec.accepted = rec.ratio >= cfg_.eta1;
  if (!rec.accepted) {
    radius_ *= cfg_.gamma1;
  } else {
    if (rec.ratio > cfg_.eta2) radius_ *= cfg_.gamma2;
    Vector g_new = gradient_at_trial();
    if (g_new.size() != x_.size() || !g_new.allFinite())
      throw ObjectiveFailure("non-finite gradient at iteration " + std::to_string(k_ + 1));
    pair_ = CurvaturePair{prop_.step.p, g_new - g_};
    x_ = prop_.trial;
    f_ = f_trial;
    g_ = std::move(g_new);
    gnorm_ = g_.norm();
  }
  b_ = std::move(b_next_);
  proposed_ = false;
  ++k_;
  rec.k = k_;
  rec.f = f_;
  rec.gnorm = gnorm_;
  rec.rank = b_.rank();
  rec.reduction_loss = reduction_loss_;
  return rec;
}

MinimizeResult minimize(const Objective& obj, const Vector& x0, const OptimizerConfig& config,
                        const IterationObserver& observer) {
  using clock = std::chrono::steady_clock;
  if (x0.size() != obj.dim()) throw DimensionMismatch("minimize: start point length differs from objective dimension");
  config.validate(obj.dim());

  MinimizeResult res;
  res.metadata["measure"] = to_string(config.measure);
  res.metadata["m"] = std::to_string(config.m);
  res.metadata["rejected_step_policy"] = "keep updated and reduced matrix; pair not reapplied";
  res.metadata["hard_case_seed"] = std::to_string(kHardCaseSeed);
  res.x = x0;

  const double f0 = obj.value(x0);
  const Vector g0 = obj.gradient(x0);
  if (!std::isfinite(f0) || !g0.allFinite()) {
    res.status = Status::ObjectiveFailure;
    res.message = "non-finite value or gradient at the start point";
    res.f = f0;
    res.gnorm = g0.norm();
    res.hessian = EigenLmMatrix(x0.size(), 1.0);
    return res;
  }

  TrustRegionOptimizer opt(x0, f0, g0, config);
  res.metadata["gradient_tolerance"] = std::to_string(opt.tolerance());
  IterationRecord first;
  first.f = f0;
  first.gnorm = g0.norm();
  first.radius = config.radius0;
  first.accepted = true;
  first.ratio = std::numeric_limits<double>::quiet_NaN();
  res.trace.push_back(first);
  if (observer) observer(first, opt);

  std::optional<Status> abort;
  while (!opt.converged() && opt.iteration() < config.max_iter) {
    const auto t0 = clock::now();
    IterationRecord rec;
    try {
      const auto& prop = opt.propose();
      double f_trial;
      if (config.overlap) {
        auto pending = std::async(std::launch::async, [&opt] { opt.finalize(); });
        f_trial = obj.value(prop.trial);
        pending.get();
      } else {
        opt.finalize();
        f_trial = obj.value(prop.trial);
      }
      if (!std::isfinite(f_trial))
        throw ObjectiveFailure("non-finite objective value at iteration " + std::to_string(opt.iteration() + 1));
      const Vector trial = prop.trial;
      rec = opt.commit(f_trial, [&] { return obj.gradient(trial); });
    } catch (const StructuralSplit& e) {
      abort = Status::StructuralSplit;
      res.message = e.what();
    } catch (const ObjectiveFailure& e) {
      abort = Status::ObjectiveFailure;
      res.message = e.what();
    }
    if (abort) break;
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    res.trace.push_back(rec);
    if (observer) observer(rec, opt);
  }

  res.x = opt.x();
  res.f = opt.f();
  res.gnorm = opt.g().norm();
  res.hessian = opt.hessian();
  if (abort)
    res.status = *abort;
  else
    res.status = opt.converged() ? Status::Converged : Status::MaxIterations;
  return res;
}

EquivalenceReport full_memory_equivalence_mode(const Objective& obj, const Vector& x0, const OptimizerConfig& config) {
  if (config.m < 2 * config.max_iter && config.m < obj.dim())
    throw ConfigError("full-memory mode needs m >= 2*max_iter so that reduction never binds");
  if (obj.dim() > 2000) throw GuardExceeded("full-memory mode keeps a dense matrix; n must be <= 2000");
  EquivalenceReport rep;
  Matrix dense = Matrix::Identity(obj.dim(), obj.dim());
  auto track = [&](const IterationRecord& rec, const TrustRegionOptimizer& opt) {
    if (rec.k > 0) {
      const Matrix cur = to_dense(opt.hessian());
      rep.relative_errors.push_back((cur - dense).norm() / dense.norm());
    }
    const auto& pair = opt.pending_pair();
    if (pair && curvature_check(*pair, config.curv_eps)) dense = oracle::dense_broyden(dense, pair->s, pair->y, 0.0);
  };
  rep.result = minimize(obj, x0, config, track);
  return rep;
}

}  // namespace lrsqn
