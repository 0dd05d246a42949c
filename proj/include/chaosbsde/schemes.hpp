#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "chaosbsde/chaos.hpp"
#include "chaosbsde/grids.hpp"
#include "chaosbsde/multiindex.hpp"
#include "chaosbsde/problems.hpp"

namespace chaosbsde {

struct EulerParams {
  int m = 20;
  int M = 10;
  int P = 3;
  std::size_t N = 100000;
  std::uint64_t seed = 1;
  int threads = 0;
  /// Keep d^i for every step (needed for simulate_solution_paths).
  bool retain = false;
  /// Track sum_a a! Var(F H_a) per step.
  bool variance = true;
  std::uint64_t index_cap = kDefaultIndexCap;
};

struct PicardParams : EulerParams {
  int Q = 7;
};

struct StepDiagnostics {
  int step = 0;   // Euler step i, or Picard iteration q + 1
  int cells = 0;  // M(i)
  std::size_t indices = 0;
  double second_moment = 0.0;  // sum_a d_a^2 / a!
  double variance = 0.0;       // V_i (0 when not tracked)
};

struct BsdeResult {
  double y0 = 0.0;
  std::vector<double> z0;
  std::vector<StepDiagnostics> steps;
  /// Retained d^1..d^m (index i - 1), then the terminal projection d^xi.
  std::vector<ChaosCoefficients> coefficients;
  std::optional<ChaosCoefficients> terminal;
  std::shared_ptr<const TimeGrid> grid;
  int M = 0;
  double wall_ms = 0.0;
};

/// Backward Euler recursion with chaos projections, steps i = m..1.
BsdeResult run_euler(const Problem& problem, const EulerParams& params);

/// Picard iterations q = 0..Q-1 on [0, T] with fresh paths per iteration.
BsdeResult run_picard(const Problem& problem, const PicardParams& params);

struct TrajectoryTable {
  int dims = 1;
  bool hedge = false;
  /// One row per (path, node): path, t, Y, Z_1..Z_d[, H_1..H_d].
  std::vector<std::vector<double>> rows;
};

/// Evaluates (Y, Z) along K fresh paths at every node t_k using the step-k+1
/// coefficients on [t_k, t_{k+1}) and the terminal projection at T. Hedge
/// columns H = (vol^T diag S)^{-1} Z are added for market problems.
TrajectoryTable simulate_solution_paths(const BsdeResult& result,
                                        const Problem& problem, std::size_t K,
                                        std::uint64_t seed);

}  // namespace chaosbsde
