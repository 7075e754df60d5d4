// lrsqn: command-line front end for the limited-memory trust-region library.

#include "lrsqn/driver.hpp"
#include "lrsqn/errors.hpp"
#include "lrsqn/oracle.hpp"
#include "lrsqn/problems.hpp"
#include "lrsqn/reduction.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace lrsqn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitMaxIter = 2;
constexpr int kExitSplit = 3;

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LRSQN_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring LRSQN_THREADS='" << env << "'\n";
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, jobs) on a small pool. Each job writes only its own slot.
void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = worker_count(jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<long> parse_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const long v = std::stol(item, &used);
    if (used != item.size()) throw ConfigError("bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Config flags shared by minimize; applied after --config so flags win.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value file with optimizer settings");
    for (const char* key : {"m", "measure", "eta1", "eta2", "gamma1", "gamma2", "tr_eps", "curv_eps", "nu", "radius0",
                            "max_iter", "grad_tol_abs", "grad_tol_rel_grad", "grad_tol_rel_f", "reduce_every",
                            "overlap"}) {
      std::string flag = std::string("--") + key;
      std::replace(flag.begin() + 2, flag.end(), '_', '-');
      app->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); },
          std::string("optimizer setting '") + key + "'");
    }
  }

  OptimizerConfig build() const {
    OptimizerConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
      cfg = load_config(in, cfg);
    }
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
  }
};

struct MinimizeArgs {
  std::string problem = "qp";
  long n = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string data;
  double ridge = 1e-4;
  long samples = 500;
  long features = 200;
  ConfigFlags flags;
};

int run_minimize(const MinimizeArgs& a) {
  OptimizerConfig cfg = a.flags.build();
  std::unique_ptr<Objective> obj;
  Vector x0;
  if (a.problem == "qp") {
    const long n = a.n > 0 ? a.n : 50;
    obj = std::make_unique<QuadraticObjective>(gen_random_qp(n, a.seed));
    x0 = Vector::Zero(n);
  } else if (a.problem == "rosenbrock") {
    const long n = a.n > 0 ? a.n : 2;
    obj = std::make_unique<Rosenbrock>(n);
    x0.resize(n);
    for (long i = 0; i < n; ++i) x0(i) = i % 2 == 0 ? -1.2 : 1.0;
  } else if (a.problem == "logreg") {
    SparseDataset ds;
    if (!a.data.empty()) {
      std::ifstream in(a.data);
      if (!in) throw ConfigError("cannot open data file '" + a.data + "'");
      ds = parse_libsvm(in);
    } else {
      ds = make_separable_dataset(a.samples, a.features, a.seed);
    }
    obj = std::make_unique<LogisticObjective>(std::move(ds), a.ridge, a.n);
    x0 = Vector::Zero(obj->dim());
  } else {
    throw ConfigError("unknown problem '" + a.problem + "' (expected qp, logreg, rosenbrock)");
  }

  const MinimizeResult res = minimize(*obj, x0, cfg);
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw ConfigError("cannot write '" + a.out + "'");
    write_trace_csv(os, res.trace);
    std::ofstream meta(a.out + ".meta");
    meta << "problem=" << a.problem << "\nseed=" << a.seed << "\nstatus=" << to_string(res.status) << '\n';
    for (const auto& [k, v] : res.metadata) meta << k << '=' << v << '\n';
  }
  std::cout << "status=" << to_string(res.status) << " iterations=" << res.trace.size() - 1 << " f=" << res.f
            << " gnorm=" << res.gnorm << '\n';
  if (!res.message.empty()) std::cerr << res.message << '\n';
  switch (res.status) {
    case Status::Converged: return kExitOk;
    case Status::MaxIterations: return kExitMaxIter;
    case Status::StructuralSplit: return kExitSplit;
    case Status::ObjectiveFailure: return kExitFailure;
  }
  return kExitFailure;
}

struct BenchQpArgs {
  long n = 200;
  long trials = 50;
  long m = 5;
  long iters = 150;
  std::uint64_t seed = 1;
  std::string out;
};

// log10 of |x_k - 1| / |x_0 - 1| for each iteration, held after convergence.
std::vector<double> qp_distances(const QuadraticObjective& obj, Measure measure, long m, long iters) {
  const Index n = obj.dim();
  OptimizerConfig cfg;
  cfg.m = m;
  cfg.measure = measure;
  cfg.max_iter = iters;
  cfg.grad_tol_abs = 1e-12;
  cfg.grad_tol_rel_grad = 0.0;
  cfg.grad_tol_rel_f = 0.0;
  const double d0 = std::sqrt(static_cast<double>(n));
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(iters + 1));
  auto record = [&](const IterationRecord&, const TrustRegionOptimizer& opt) {
    const double d = (opt.x() - Vector::Ones(n)).norm() / d0;
    dist.push_back(std::log10(std::max(d, 1e-16)));
  };
  minimize(obj, Vector::Zero(n), cfg, record);
  while (static_cast<long>(dist.size()) < iters + 1) dist.push_back(dist.back());
  return dist;
}

int run_bench_qp(const BenchQpArgs& a) {
  if (a.trials < 1 || a.iters < 0 || a.n < 2) throw ConfigError("bench-qp: need trials >= 1, iters >= 0, n >= 2");
  const auto trials = static_cast<std::size_t>(a.trials);
  std::vector<std::vector<double>> l2(trials), fro(trials);
  parallel_for(trials, [&](std::size_t t) {
    const QuadraticObjective obj(gen_random_qp(a.n, a.seed + t));
    l2[t] = qp_distances(obj, Measure::L2, a.m, a.iters);
    fro[t] = qp_distances(obj, Measure::Frobenius, a.m, a.iters);
  });

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw ConfigError("cannot write '" + a.out + "'");
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os.precision(10);
  os << "iter,mean_l2,sd_l2,mean_fro,sd_fro\n";
  auto stats = [&](const std::vector<std::vector<double>>& runs, long k) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r[static_cast<std::size_t>(k)];
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& r : runs) var += std::pow(r[static_cast<std::size_t>(k)] - mean, 2);
    const double sd = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  for (long k = 0; k <= a.iters; ++k) {
    const auto [ml2, sl2] = stats(l2, k);
    const auto [mfr, sfr] = stats(fro, k);
    os << k << ',' << ml2 << ',' << sl2 << ',' << mfr << ',' << sfr << '\n';
  }
  return kExitOk;
}

struct BenchAggArgs {
  std::string n_list = "4,16,64";
  std::string m_list;
  long trials = 100;
  std::string measure = "fro";
  double nu = 0.0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_bench_agg(const BenchAggArgs& a) {
  const auto ns = parse_list(a.n_list);
  const Measure measure = parse_measure(a.measure);
  if (a.trials < 1) throw ConfigError("bench-agg: trials must be >= 1");
  std::vector<std::pair<long, long>> cells;
  for (long n : ns) {
    const std::vector<long> ms = a.m_list.empty() ? std::vector<long>{n} : parse_list(a.m_list);
    for (long m : ms) {
      if (m < 1 || m > n || n < 1)
        throw ConfigError("bench-agg: invalid cell n=" + std::to_string(n) + " m=" + std::to_string(m) +
                          " (need 1 <= m <= n)");
      cells.emplace_back(n, m);
    }
  }

  const auto per_cell = static_cast<std::size_t>(a.trials);
  std::vector<double> errors(cells.size() * per_cell);
  AggregationOptions opts;
  opts.measure = measure;
  opts.nu = a.nu;
  parallel_for(errors.size(), [&](std::size_t job) {
    const auto& [n, m] = cells[job / per_cell];
    errors[job] = aggregation_test(n, m, a.seed + job % per_cell, opts);
  });

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw ConfigError("cannot write '" + a.out + "'");
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os.precision(6);
  os << std::scientific << "n,m,trials,min,q1,median,q3,max\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> v(errors.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
                          errors.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
    os << cells[c].first << ',' << cells[c].second << ',' << a.trials << ',' << quantile(v, 0.0) << ','
       << quantile(v, 0.25) << ',' << quantile(v, 0.5) << ',' << quantile(v, 0.75) << ',' << quantile(v, 1.0)
       << '\n';
  }
  return kExitOk;
}

struct ReduceArgs {
  std::string measure = "fro";
  long target = 0;
  std::string in;
  std::string out;
  bool verify = false;
};

int run_reduce(const ReduceArgs& a) {
  const Measure measure = parse_measure(a.measure);
  EigenLmMatrix mat;
  {
    std::ifstream in(a.in);
    if (!in) throw ConfigError("cannot open '" + a.in + "'");
    mat = read_text(in);
  }
  const Reduction red = reduce(mat, a.target, measure);
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw ConfigError("cannot write '" + a.out + "'");
    write_text(os, red.matrix);
  } else {
    write_text(std::cout, red.matrix);
  }
  std::cerr.precision(17);
  std::cerr << "start=" << red.selection.start_index << " length=" << red.selection.length
            << " value=" << red.selection.mean_value << " loss=" << red.selection.loss << '\n';
  if (a.verify) {
    const auto ref = oracle::dense_nearest(to_dense(mat), a.target, measure);
    const double scale = std::max(1.0, std::abs(ref.loss));
    const double loss_gap = std::abs(ref.loss - red.selection.loss) / scale;
    const double mat_gap = (ref.matrix - to_dense(red.matrix)).norm() / std::max(1.0, ref.matrix.norm());
    std::cerr << "verify: loss_gap=" << loss_gap << " matrix_gap=" << mat_gap << '\n';
    if (loss_gap > 1e-10 || mat_gap > 1e-9) return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-memory quasi-Newton trust-region optimizer"};
  app.require_subcommand(1);

  MinimizeArgs mn;
  auto* minimize_cmd = app.add_subcommand("minimize", "Minimize a test problem and write the iteration trace");
  minimize_cmd->add_option("--problem", mn.problem, "qp, logreg or rosenbrock")->capture_default_str();
  minimize_cmd->add_option("--n", mn.n, "Problem dimension (qp default 50, rosenbrock 2)");
  minimize_cmd->add_option("--seed", mn.seed, "Random seed")->capture_default_str();
  minimize_cmd->add_option("--out", mn.out, "Trace CSV path (metadata goes to <out>.meta)");
  minimize_cmd->add_option("--data", mn.data, "LIBSVM file for logreg (synthetic data otherwise)");
  minimize_cmd->add_option("--ridge", mn.ridge, "Ridge weight for logreg")->capture_default_str();
  minimize_cmd->add_option("--samples", mn.samples, "Synthetic logreg rows")->capture_default_str();
  minimize_cmd->add_option("--features", mn.features, "Synthetic logreg columns")->capture_default_str();
  mn.flags.attach(minimize_cmd);

  BenchQpArgs bq;
  auto* bench_qp = app.add_subcommand("bench-qp", "Random QP distance-to-optimum study, l2 vs fro");
  bench_qp->add_option("--n", bq.n)->capture_default_str();
  bench_qp->add_option("--trials", bq.trials)->capture_default_str();
  bench_qp->add_option("--m", bq.m, "Eigenpair budget")->capture_default_str();
  bench_qp->add_option("--iters", bq.iters)->capture_default_str();
  bench_qp->add_option("--seed", bq.seed, "Trial t uses seed + t")->capture_default_str();
  bench_qp->add_option("--out", bq.out, "CSV path (stdout if omitted)");

  BenchAggArgs ba;
  auto* bench_agg = app.add_subcommand("bench-agg", "Curvature aggregation study, quartiles per (n, m)");
  bench_agg->add_option("--n-list", ba.n_list, "Comma-separated dimensions")->capture_default_str();
  bench_agg->add_option("--m-list", ba.m_list, "Comma-separated pair counts (default m = n)");
  bench_agg->add_option("--trials", ba.trials)->capture_default_str();
  bench_agg->add_option("--measure", ba.measure)->capture_default_str();
  bench_agg->add_option("--nu", ba.nu, "Pivot drop threshold")->capture_default_str();
  bench_agg->add_option("--seed", ba.seed)->capture_default_str();
  bench_agg->add_option("--out", ba.out, "CSV path (stdout if omitted)");

  ReduceArgs rd;
  auto* reduce_cmd = app.add_subcommand("reduce", "Reduce a stored matrix to a smaller rank");
  reduce_cmd->add_option("--measure", rd.measure, "l2, fro, stein, istein or sstein")->capture_default_str();
  reduce_cmd->add_option("--target-rank", rd.target, "Eigenpair budget m")->required();
  reduce_cmd->add_option("--in", rd.in, "Input matrix (text format)")->required();
  reduce_cmd->add_option("--out", rd.out, "Output matrix (stdout if omitted)");
  reduce_cmd->add_flag("--verify", rd.verify, "Compare with the dense reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFailure;
  }

  try {
    if (*minimize_cmd) return run_minimize(mn);
    if (*bench_qp) return run_bench_qp(bq);
    if (*bench_agg) return run_bench_agg(ba);
    if (*reduce_cmd) return run_reduce(rd);
  } catch (const StructuralSplit& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSplit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
