#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chaosbsde {

/// Values of a d-dimensional process at sorted times, laid out [point][coord].
class PathTable {
 public:
  PathTable(std::vector<double> times, int dims, std::vector<double> values);

  std::span<const double> times() const { return times_; }
  int dims() const { return dims_; }
  std::size_t points() const { return times_.size(); }
  double operator()(std::size_t point, int coord) const {
    return values_[point * static_cast<std::size_t>(dims_) +
                   static_cast<std::size_t>(coord)];
  }
  /// Index of time t; throws std::out_of_range naming t when missing.
  std::size_t index_of(double t) const;
  double at(double t, int coord) const { return (*this)(index_of(t), coord); }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> times_;
  int dims_;
  std::vector<double> values_;
};

/// Generator f(t, y, z).
struct Driver {
  std::string name;
  std::function<double(double, double, std::span<const double>)> eval;
  double lipschitz = 0.0;
  bool bounded = false;
  /// f identically zero (lets schemes skip the Monte Carlo correction).
  bool zero = false;

  double operator()(double t, double y, std::span<const double> z) const {
    return eval(t, y, z);
  }
};

struct MarketModel {
  Eigen::VectorXd s0;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd correlation;
  /// Sigma_ij = sigma_i L_ij with correlation = L L^T.
  Eigen::MatrixXd vol;
  /// Solves vol * theta = mu - r 1.
  Eigen::VectorXd theta;
  double r = 0.0;
  double R = 0.0;
  double strike = 0.0;
  double barrier = 0.0;

  int dims() const { return static_cast<int>(s0.size()); }
};

/// Builds the model and its Cholesky factor; throws std::invalid_argument if
/// the correlation matrix is not positive definite or sizes disagree.
MarketModel make_market(Eigen::VectorXd s0, Eigen::VectorXd mu,
                        Eigen::VectorXd sigma, Eigen::MatrixXd correlation,
                        double r, double R, double strike, double barrier);

/// Equicorrelation matrix with off-diagonal rho.
Eigen::MatrixXd equicorrelation(int d, double rho);

/// S_t = S_0 * exp((mu - diag(vol vol^T)/2) t + vol B_t) at every point.
PathTable gbm_path(const MarketModel& model, const PathTable& brownian);

double barrier_call_payoff(const MarketModel& model, const PathTable& prices,
                           std::span<const double> monitoring);
double running_max_abs_payoff(const PathTable& brownian,
                              std::span<const double> monitoring);
double max_call_payoff(const MarketModel& model, const PathTable& prices);
double vanilla_call_payoff(const MarketModel& model, const PathTable& prices);

Driver driver_zero();
Driver driver_linear(double r);
Driver driver_cos();
/// -r y - theta.z + (R - r)(y - 1^T A z)_- with A = vol^{-1}, or
/// A = vol^{-T} when `transpose` is set (the self-financing wealth form).
Driver driver_borrowing(const MarketModel& model, bool transpose = false);

/// Terminal condition as a functional of the Brownian path.
struct TerminalCondition {
  std::string name;
  /// Times (besides T) the payoff reads.
  std::vector<double> monitoring;
  std::function<double(const PathTable&)> payoff;

  double operator()(const PathTable& brownian) const { return payoff(brownian); }
};

struct Problem {
  std::string id;
  int dims = 1;
  double horizon = 1.0;
  Driver driver;
  TerminalCondition terminal;
  std::optional<MarketModel> market;
  /// Discount rate of the linear problems (oracles price e^{-rT} E xi).
  double discount = 0.0;
  /// Rebuilds the terminal condition for a shifted market (delta oracle).
  std::function<TerminalCondition(const MarketModel&)> terminal_for;
};

/// Parameters of the problem catalog. Unset market fields take the values of
/// the chosen problem.
struct ProblemConfig {
  std::string id = "example1";
  double horizon = 1.0;
  int dims = 0;  // 0: the problem's own dimension
  std::optional<double> s0, strike, barrier, r, R, sigma, rho;
  std::optional<std::vector<double>> mu, sigmas;
  double constant = 1.0;
  bool transpose_borrowing = false;
  // custom problems
  std::string driver = "zero";
  std::string payoff = "b_t";
  double driver_rate = 0.0;
};

/// Catalog: example1, example2, example3, vanilla_call, bt_squared,
/// constant, custom. Throws std::invalid_argument for unknown ids.
Problem make_problem(const ProblemConfig& cfg);

const std::vector<std::string>& problem_ids();

/// Monitoring grid {kT/n : k = 0..n}.
std::vector<double> monitoring_grid(double horizon, int n);

}  // namespace chaosbsde
