#include "lrsqn/reduction.hpp"

#include "lrsqn/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace lrsqn {

Measure parse_measure(std::string_view name) {
  std::string s(name);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "l2") return Measure::L2;
  if (s == "fro" || s == "frobenius") return Measure::Frobenius;
  if (s == "stein") return Measure::Stein;
  if (s == "istein" || s == "inverse-stein" || s == "inversestein") return Measure::InverseStein;
  if (s == "sstein" || s == "symmetrized-stein" || s == "symmetrizedstein") return Measure::SymmetrizedStein;
  throw ConfigError("unknown measure '" + std::string(name) + "' (expected l2, fro, stein, istein, sstein)");
}

std::string to_string(Measure m) {
  switch (m) {
    case Measure::L2: return "l2";
    case Measure::Frobenius: return "fro";
    case Measure::Stein: return "stein";
    case Measure::InverseStein: return "istein";
    case Measure::SymmetrizedStein: return "sstein";
  }
  return "?";
}

bool requires_positive(Measure m) {
  return m == Measure::Stein || m == Measure::InverseStein || m == Measure::SymmetrizedStein;
}

namespace {

void check_block(std::span<const SpectrumRun> block, Measure m) {
  if (block.empty()) throw InfeasibleWindow("empty block");
  for (const auto& run : block) {
    if (run.count < 1) throw InfeasibleWindow("block run with count < 1");
    if (requires_positive(m) && !(run.value > 0.0))
      throw PositivityViolation(to_string(m) + " requires positive eigenvalues, got " + std::to_string(run.value));
  }
}

}  // namespace

double block_mean(std::span<const SpectrumRun> block, Measure m) {
  check_block(block, m);
  double total = 0.0, sum = 0.0, inv_sum = 0.0;
  double lo = block.front().value, hi = block.front().value;
  for (const auto& run : block) {
    const auto c = static_cast<double>(run.count);
    total += c;
    sum += c * run.value;
    if (requires_positive(m)) inv_sum += c / run.value;
    lo = std::min(lo, run.value);
    hi = std::max(hi, run.value);
  }
  switch (m) {
    case Measure::L2: return 0.5 * (lo + hi);
    case Measure::Frobenius:
    case Measure::InverseStein: return sum / total;
    case Measure::Stein: return total / inv_sum;
    case Measure::SymmetrizedStein: return std::sqrt((sum / total) * (total / inv_sum));
  }
  return 0.0;
}

double block_loss(std::span<const SpectrumRun> block, double lambda, Measure m) {
  check_block(block, m);
  if (requires_positive(m) && !(lambda > 0.0)) throw PositivityViolation("block_loss: lambda must be positive");
  double loss = 0.0;
  for (const auto& run : block) {
    const auto c = static_cast<double>(run.count);
    const double v = run.value;
    switch (m) {
      case Measure::L2: loss = std::max(loss, std::abs(v - lambda)); break;
      case Measure::Frobenius: loss += c * (v - lambda) * (v - lambda); break;
      case Measure::Stein: loss += c * (lambda / v - std::log(lambda / v)); break;
      case Measure::InverseStein: loss += c * (v / lambda - std::log(v / lambda)); break;
      case Measure::SymmetrizedStein: loss += c * (v / lambda + lambda / v); break;
    }
  }
  return loss;
}

namespace {

// Runs covering sorted positions [lo, lo+len) (0-based).
std::vector<SpectrumRun> window_runs(const std::vector<SpectrumRun>& runs, Index lo, Index len) {
  std::vector<SpectrumRun> out;
  Index pos = 0;
  const Index hi = lo + len;
  for (const auto& run : runs) {
    const Index a = std::max(pos, lo), b = std::min(pos + run.count, hi);
    if (b > a) out.push_back({run.value, b - a});
    pos += run.count;
    if (pos >= hi) break;
  }
  return out;
}

Index alpha_run_start(const SpectrumSummary& spec) {
  Index pos = 0;
  for (const auto& run : spec.below) pos += run.count;
  return pos;
}

bool contains_alpha_run(const SpectrumSummary& spec, Index lo, Index len) {
  if (spec.alpha_count == 0) return true;
  const Index a = alpha_run_start(spec);
  return lo <= a && a + spec.alpha_count <= lo + len;
}

}  // namespace

SequenceSelection window_selection(const SpectrumSummary& spec, Index m, Measure measure, Index start_index) {
  const Index n = spec.size();
  const Index len = n - m;
  if (len < 1 || m < 0) throw InfeasibleWindow("window length n-m must be in [1, n]");
  if (start_index < 1 || start_index > m + 1) throw InfeasibleWindow("window start out of range");
  const auto block = window_runs(spec.runs(), start_index - 1, len);
  SequenceSelection sel;
  sel.start_index = start_index;
  sel.length = len;
  sel.mean_value = block_mean(block, measure);
  sel.loss = block_loss(block, sel.mean_value, measure);
  return sel;
}

SequenceSelection select_sequence(const SpectrumSummary& spec, Index n, Index m, Measure measure) {
  if (spec.size() != n) throw DimensionMismatch("select_sequence: spectrum size differs from n");
  if (m < 0 || n - m < 1) throw InfeasibleWindow("select_sequence: need 0 <= m < n");
  const auto runs = spec.runs();
  SequenceSelection best;
  bool best_whole = false;
  bool have = false;
  for (Index start = 1; start <= m + 1; ++start) {
    const auto block = window_runs(runs, start - 1, n - m);
    SequenceSelection sel;
    sel.start_index = start;
    sel.length = n - m;
    sel.mean_value = block_mean(block, measure);
    sel.loss = block_loss(block, sel.mean_value, measure);
    const bool whole = contains_alpha_run(spec, start - 1, n - m);
    if (!have) {
      best = sel;
      best_whole = whole;
      have = true;
      continue;
    }
    const double tol = 1e-12 * std::max(std::abs(best.loss), std::abs(sel.loss));
    if (sel.loss < best.loss - tol || (sel.loss <= best.loss + tol && whole && !best_whole)) {
      best = sel;
      best_whole = whole;
    }
  }
  return best;
}

Reduction reduce(const EigenLmMatrix& mat, Index target_rank, Measure measure) {
  const Index n = mat.dim();
  const Index r = mat.rank();
  if (target_rank < 0) throw InfeasibleWindow("reduce: negative target rank");
  if (requires_positive(measure)) {
    if (!(mat.alpha() > 0.0)) throw PositivityViolation(to_string(measure) + " requires a positive definite matrix");
    for (Index i = 0; i < r; ++i)
      if (!(mat.eigenvalue(i) > 0.0))
        throw PositivityViolation(to_string(measure) + " requires a positive definite matrix");
  }

  const SpectrumSummary spec = spectrum(mat);
  Reduction out;
  if (r <= target_rank || target_rank >= n) {
    out.matrix = mat;
    out.selection.start_index = alpha_run_start(spec) + 1;
    out.selection.length = std::max<Index>(0, n - target_rank);
    out.selection.mean_value = mat.alpha();
    out.selection.loss = 0.0;
    out.kept.resize(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) out.kept[static_cast<std::size_t>(i)] = i;
    return out;
  }

  const SequenceSelection sel = select_sequence(spec, n, target_rank, measure);
  const Index lo = sel.start_index - 1;
  const Index hi = lo + sel.length;
  if (!contains_alpha_run(spec, lo, sel.length)) {
    const Index a = alpha_run_start(spec);
    throw StructuralSplit("reduce(" + to_string(measure) + "): optimal window [" + std::to_string(lo + 1) + ", " +
                          std::to_string(hi) + "] splits the shift block at positions [" + std::to_string(a + 1) +
                          ", " + std::to_string(a + spec.alpha_count) + "]");
  }

  // Sorted positions of explicit eigenpairs: those below the shift come
  // first, then the alpha run (which also absorbs folded offsets), then the rest.
  const double tol = zero_tolerance(mat.alpha());
  Index pos_below = 0;
  Index pos_above = alpha_run_start(spec) + spec.alpha_count;
  for (Index i = 0; i < r; ++i) {
    const double off = mat.offsets()(i);
    if (std::abs(off) <= tol) continue;
    const Index pos = off < 0 ? pos_below++ : pos_above++;
    if (pos < lo || pos >= hi) out.kept.push_back(i);
  }

  const Index k = static_cast<Index>(out.kept.size());
  Matrix e(n, k);
  Vector off(k);
  for (Index j = 0; j < k; ++j) {
    const Index src = out.kept[static_cast<std::size_t>(j)];
    e.col(j) = mat.eigvecs().col(src);
    off(j) = mat.eigenvalue(src) - sel.mean_value;
  }
  out.matrix = k == 0 ? EigenLmMatrix(n, sel.mean_value) : EigenLmMatrix(sel.mean_value, std::move(e), std::move(off));
  out.selection = sel;
  return out;
}

EigenLmMatrix project_interval(const EigenLmMatrix& mat, double lambda_max) {
  if (!(lambda_max > 0.0)) throw InfeasibleWindow("project_interval: lambda_max must be positive");
  auto clamp = [&](double v) { return std::clamp(v, -lambda_max, lambda_max); };
  const double a = clamp(mat.alpha());
  if (mat.rank() == 0) return EigenLmMatrix(mat.dim(), a);
  Vector off(mat.rank());
  for (Index i = 0; i < mat.rank(); ++i) off(i) = clamp(mat.eigenvalue(i)) - a;
  return EigenLmMatrix(a, mat.eigvecs(), std::move(off));
}

}  // namespace lrsqn
