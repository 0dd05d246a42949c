#pragma once

#include <span>
#include <vector>

namespace chaosbsde {

/// Coarse partition 0 = t_0 < ... < t_m = T driving the backward recursion.
class TimeGrid {
 public:
  /// Validates strict monotonicity, t_0 = 0 and the mesh-regularity bound
  /// max_i dt_i / dt_{i+1} <= max_ratio.
  explicit TimeGrid(std::vector<double> points, double max_ratio = 1.0);

  static TimeGrid uniform(double horizon, int steps);

  int steps() const { return static_cast<int>(points_.size()) - 1; }
  double horizon() const { return points_.back(); }
  /// t_i for i in [0, m].
  double time(int i) const { return points_.at(static_cast<std::size_t>(i)); }
  /// Delta_i = t_i - t_{i-1} for i in [1, m].
  double step(int i) const;
  double max_ratio() const { return max_ratio_; }
  /// True when the grid came from uniform(); lets callers test lattice
  /// membership with integer arithmetic.
  bool is_uniform() const { return uniform_; }

  std::span<const double> points() const { return points_; }

 private:
  std::vector<double> points_;
  double max_ratio_;
  bool uniform_ = false;
};

TimeGrid build_time_grid(double horizon, int steps);

/// j-th point of the uniform lattice {j T / M}. Every grid that contains a
/// lattice point obtains it from here, so shared points are bitwise equal.
double lattice_point(int j, double horizon, int cells);

/// Per-step partition of [0, t_i]: the lattice points below t_i, closed
/// with t_i. Cells are (s_{j-1}, s_j], 1-based j.
class RefinedGrid {
 public:
  RefinedGrid(int step, std::vector<double> points);

  int step() const { return step_; }
  /// M(i), the number of cells.
  int cells() const { return static_cast<int>(points_.size()) - 1; }
  /// s_j for j in [0, M(i)].
  double point(int j) const { return points_.at(static_cast<std::size_t>(j)); }
  /// delta_j = s_j - s_{j-1} for j in [1, M(i)].
  double width(int j) const;
  double end() const { return points_.back(); }
  std::span<const double> points() const { return points_; }

  /// The unique r with t in (s_{r-1}, s_r]. Throws for t <= 0 or t > t_i.
  int locate(double t) const;

 private:
  int step_;
  std::vector<double> points_;
};

RefinedGrid build_refined_grid(const TimeGrid& grid, int cells, int step);

/// Same as rg.locate(t).
inline int locate_cell(const RefinedGrid& rg, double t) { return rg.locate(t); }

/// Sorted union of two point sets; points closer than a few ulps of the
/// horizon are merged (the value from `a` is kept).
std::vector<double> merge_points(std::span<const double> a,
                                 std::span<const double> b);

}  // namespace chaosbsde
