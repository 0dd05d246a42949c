#include "chaosbsde/grids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace chaosbsde {

namespace {

double merge_tolerance(double horizon) {
  return 64.0 * std::numeric_limits<double>::epsilon() *
         std::max(1.0, std::abs(horizon));
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> points, double max_ratio)
    : points_(std::move(points)), max_ratio_(max_ratio) {
  if (points_.size() < 2) {
    throw std::invalid_argument("TimeGrid: need at least two points");
  }
  if (points_.front() != 0.0) {
    throw std::invalid_argument("TimeGrid: first point must be 0");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1]) || !std::isfinite(points_[i])) {
      throw std::invalid_argument("TimeGrid: points not strictly increasing at " +
                                  std::to_string(i));
    }
  }
  const double slack = 1e-12;
  for (int i = 1; i < steps(); ++i) {
    const double ratio = step(i) / step(i + 1);
    if (ratio > max_ratio_ * (1.0 + slack)) {
      throw std::invalid_argument(
          "TimeGrid: step ratio " + std::to_string(ratio) + " at i=" +
          std::to_string(i) + " exceeds L = " + std::to_string(max_ratio_));
    }
  }
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
  if (!(horizon > 0.0) || steps < 1) {
    throw std::invalid_argument("TimeGrid::uniform: need T > 0 and m >= 1");
  }
  std::vector<double> pts(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) pts[static_cast<std::size_t>(i)] = lattice_point(i, horizon, steps);
  TimeGrid g(std::move(pts), 1.0);
  g.uniform_ = true;
  return g;
}

double TimeGrid::step(int i) const {
  if (i < 1 || i > steps()) {
    throw std::out_of_range("TimeGrid::step: index " + std::to_string(i));
  }
  return points_[static_cast<std::size_t>(i)] -
         points_[static_cast<std::size_t>(i - 1)];
}

TimeGrid build_time_grid(double horizon, int steps) {
  return TimeGrid::uniform(horizon, steps);
}

double lattice_point(int j, double horizon, int cells) {
  if (j == cells) return horizon;
  if (j == 0) return 0.0;
  // Reduce j / M so equal fractions of T map to the same double.
  const int g = std::gcd(j, cells);
  return static_cast<double>(j / g) * horizon / static_cast<double>(cells / g);
}

RefinedGrid::RefinedGrid(int step, std::vector<double> points)
    : step_(step), points_(std::move(points)) {
  if (points_.size() < 2 || points_.front() != 0.0) {
    throw std::invalid_argument("RefinedGrid: need 0 = s_0 < s_1");
  }
  for (std::size_t j = 1; j < points_.size(); ++j) {
    if (!(points_[j] > points_[j - 1])) {
      throw std::invalid_argument("RefinedGrid: empty cell " +
                                  std::to_string(j));
    }
  }
}

double RefinedGrid::width(int j) const {
  if (j < 1 || j > cells()) {
    throw std::out_of_range("RefinedGrid::width: cell " + std::to_string(j));
  }
  return points_[static_cast<std::size_t>(j)] -
         points_[static_cast<std::size_t>(j - 1)];
}

int RefinedGrid::locate(double t) const {
  if (!(t > 0.0) || t > end()) {
    throw std::out_of_range("locate_cell: t = " + std::to_string(t) +
                            " outside (0, " + std::to_string(end()) + "]");
  }
  // First point >= t closes the cell containing t.
  const auto it = std::lower_bound(points_.begin(), points_.end(), t);
  return static_cast<int>(it - points_.begin());
}

RefinedGrid build_refined_grid(const TimeGrid& grid, int cells, int step) {
  if (cells < 1) throw std::invalid_argument("build_refined_grid: M < 1");
  if (step < 1 || step > grid.steps()) {
    throw std::out_of_range("build_refined_grid: step " +
                            std::to_string(step) + " outside [1, m]");
  }
  const double horizon = grid.horizon();
  const double ti = grid.time(step);
  const double tol = merge_tolerance(horizon);
  std::vector<double> pts;
  for (int j = 0; j <= cells; ++j) {
    const double s = lattice_point(j, horizon, cells);
    bool below;
    if (grid.is_uniform()) {
      // s_j < t_i  <=>  j * m < i * M, exact in integers.
      below = static_cast<long long>(j) * grid.steps() <
              static_cast<long long>(step) * cells;
    } else {
      below = s < ti - tol;
    }
    if (!below) break;
    pts.push_back(s);
  }
  pts.push_back(ti);
  return RefinedGrid(step, std::move(pts));
}

std::vector<double> merge_points(std::span<const double> a,
                                 std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  const double horizon =
      std::max(a.empty() ? 0.0 : a.back(), b.empty() ? 0.0 : b.back());
  const double tol = merge_tolerance(horizon);
  for (double x : b) {
    const bool present = std::any_of(out.begin(), out.end(), [&](double y) {
      return std::abs(x - y) <= tol;
    });
    if (!present) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace chaosbsde
