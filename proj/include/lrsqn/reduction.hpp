#pragma once

#include "lrsqn/lram.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrsqn {

enum class Measure { L2, Frobenius, Stein, InverseStein, SymmetrizedStein };

/// Accepts l2, fro, stein, istein, sstein (and the full names).
Measure parse_measure(std::string_view name);
std::string to_string(Measure m);
bool requires_positive(Measure m);

/// Optimal common value for a block of eigenvalues.
double block_mean(std::span<const SpectrumRun> block, Measure m);

/// Cost of replacing every value in the block by lambda.
double block_loss(std::span<const SpectrumRun> block, double lambda, Measure m);

struct SequenceSelection {
  Index start_index = 1;  // 1-based position in the sorted spectrum
  Index length = 0;
  double mean_value = 0.0;
  double loss = 0.0;
};

/// The length-(n-m) window beginning at start_index, with its optimal value and loss.
SequenceSelection window_selection(const SpectrumSummary& spec, Index m, Measure measure, Index start_index);

/// Best consecutive window of length n-m. Near-ties (relative 1e-12) prefer a
/// window holding the whole alpha run, then the smallest start index.
SequenceSelection select_sequence(const SpectrumSummary& spec, Index n, Index m, Measure measure);

struct Reduction {
  EigenLmMatrix matrix;
  SequenceSelection selection;
  std::vector<Index> kept;  // surviving eigenpair indices of the input
};

/// Nearest member of L_{m,n}. Throws StructuralSplit if the optimal window
/// cuts the alpha run, PositivityViolation for Stein measures on non-PD input.
Reduction reduce(const EigenLmMatrix& mat, Index target_rank, Measure measure);

/// Clamps alpha and every eigenvalue to [-lambda_max, lambda_max].
EigenLmMatrix project_interval(const EigenLmMatrix& mat, double lambda_max);

}  // namespace lrsqn
