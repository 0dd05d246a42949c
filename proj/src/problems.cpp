#include "chaosbsde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaosbsde/grids.hpp"

namespace chaosbsde {

namespace {

double neg_part(double x) { return x < 0.0 ? -x : 0.0; }

Eigen::VectorXd filled(int d, double v) { return Eigen::VectorXd::Constant(d, v); }

}  // namespace

PathTable::PathTable(std::vector<double> times, int dims,
                     std::vector<double> values)
    : times_(std::move(times)), dims_(dims), values_(std::move(values)) {
  if (dims_ < 1 || values_.size() != times_.size() * static_cast<std::size_t>(dims_)) {
    throw std::invalid_argument("PathTable: shape mismatch");
  }
}

std::size_t PathTable::index_of(double t) const {
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, times_.empty() ? 1.0 : std::abs(times_.back()));
  const auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it == times_.end() || std::abs(*it - t) > tol) {
    throw std::out_of_range("path table has no time " + std::to_string(t));
  }
  return static_cast<std::size_t>(it - times_.begin());
}

Eigen::MatrixXd equicorrelation(int d, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, rho);
  c.diagonal().setOnes();
  return c;
}

MarketModel make_market(Eigen::VectorXd s0, Eigen::VectorXd mu,
                        Eigen::VectorXd sigma, Eigen::MatrixXd correlation,
                        double r, double R, double strike, double barrier) {
  const auto d = s0.size();
  if (d < 1 || mu.size() != d || sigma.size() != d || correlation.rows() != d ||
      correlation.cols() != d) {
    throw std::invalid_argument("make_market: inconsistent dimensions");
  }
  MarketModel m;
  const Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("make_market: correlation matrix is not positive definite");
  }
  m.vol = sigma.asDiagonal() * Eigen::MatrixXd(llt.matrixL());
  m.s0 = std::move(s0);
  m.mu = std::move(mu);
  m.sigma = std::move(sigma);
  m.correlation = std::move(correlation);
  m.r = r;
  m.R = R;
  m.strike = strike;
  m.barrier = barrier;
  if ((m.sigma.array() > 0.0).all()) {
    m.theta = m.vol.triangularView<Eigen::Lower>().solve(m.mu - filled(static_cast<int>(d), r));
  } else {
    m.theta = Eigen::VectorXd::Zero(d);
  }
  return m;
}

PathTable gbm_path(const MarketModel& model, const PathTable& brownian) {
  const int d = model.dims();
  if (brownian.dims() != d) throw std::invalid_argument("gbm_path: dimension mismatch");
  const Eigen::VectorXd drift =
      model.mu - 0.5 * (model.vol * model.vol.transpose()).diagonal();
  std::vector<double> out(brownian.values().size());
  for (std::size_t p = 0; p < brownian.points(); ++p) {
    const double t = brownian.times()[p];
    const Eigen::Map<const Eigen::VectorXd> b(brownian.values().data() + p * d, d);
    const Eigen::VectorXd x = drift * t + model.vol * b;
    for (int l = 0; l < d; ++l) {
      out[p * d + static_cast<std::size_t>(l)] = model.s0[l] * std::exp(x[l]);
    }
  }
  return PathTable(std::vector<double>(brownian.times().begin(), brownian.times().end()),
                   d, std::move(out));
}

double barrier_call_payoff(const MarketModel& model, const PathTable& prices,
                           std::span<const double> monitoring) {
  for (const double t : monitoring) {
    if (prices.at(t, 0) < model.barrier) return 0.0;
  }
  return std::max(prices(prices.points() - 1, 0) - model.strike, 0.0);
}

double running_max_abs_payoff(const PathTable& brownian,
                              std::span<const double> monitoring) {
  double m = 0.0;
  for (const double t : monitoring) m = std::max(m, std::abs(brownian.at(t, 0)));
  return m;
}

double max_call_payoff(const MarketModel& model, const PathTable& prices) {
  const std::size_t last = prices.points() - 1;
  double m = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < prices.dims(); ++l) m = std::max(m, prices(last, l));
  return std::max(m - model.strike, 0.0);
}

double vanilla_call_payoff(const MarketModel& model, const PathTable& prices) {
  return std::max(prices(prices.points() - 1, 0) - model.strike, 0.0);
}

Driver driver_zero() {
  return {"zero", [](double, double, std::span<const double>) { return 0.0; },
          0.0, true, true};
}

Driver driver_linear(double r) {
  return {"linear",
          [r](double, double y, std::span<const double>) { return -r * y; },
          std::abs(r), false, r == 0.0};
}

Driver driver_cos() {
  return {"cos",
          [](double, double y, std::span<const double> z) {
            return std::cos(y + z[0]);
          },
          1.0, true, false};
}

Driver driver_borrowing(const MarketModel& model, bool transpose) {
  const int d = model.dims();
  // w = A^T 1 so that 1^T A z = w . z
  const Eigen::MatrixXd inv = model.vol.inverse();
  const Eigen::VectorXd w =
      transpose ? Eigen::VectorXd(inv * Eigen::VectorXd::Ones(d))
                : Eigen::VectorXd(inv.transpose() * Eigen::VectorXd::Ones(d));
  const Eigen::VectorXd theta = model.theta;
  const double r = model.r;
  const double spread = model.R - model.r;
  const double lip = std::abs(r) + theta.norm() + std::abs(spread) * (1.0 + w.norm());
  return {transpose ? "borrowing_wealth" : "borrowing",
          [=](double, double y, std::span<const double> z) {
            double tz = 0.0;
            double wz = 0.0;
            for (int l = 0; l < d; ++l) {
              tz += theta[l] * z[static_cast<std::size_t>(l)];
              wz += w[l] * z[static_cast<std::size_t>(l)];
            }
            return -r * y - tz + spread * neg_part(y - wz);
          },
          lip, false, false};
}

std::vector<double> monitoring_grid(double horizon, int n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) t[static_cast<std::size_t>(k)] = lattice_point(k, horizon, n);
  return t;
}

const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids = {
      "example1", "example2", "example3", "vanilla_call",
      "bt_squared", "constant", "custom"};
  return ids;
}

namespace {

TerminalCondition barrier_terminal(const MarketModel& m, double T) {
  auto mon = monitoring_grid(T, 10);
  mon.erase(mon.begin());
  return {"barrier_call", mon, [m, mon](const PathTable& b) {
            return barrier_call_payoff(m, gbm_path(m, b), mon);
          }};
}

TerminalCondition vanilla_terminal(const MarketModel& m) {
  return {"vanilla_call", {}, [m](const PathTable& b) {
            return vanilla_call_payoff(m, gbm_path(m, b));
          }};
}

TerminalCondition max_call_terminal(const MarketModel& m) {
  return {"max_call", {}, [m](const PathTable& b) {
            return max_call_payoff(m, gbm_path(m, b));
          }};
}

TerminalCondition running_max_terminal(double T) {
  const auto mon = monitoring_grid(T, 10);
  return {"running_max_abs", mon,
          [mon](const PathTable& b) { return running_max_abs_payoff(b, mon); }};
}

double last_value(const PathTable& b, int l) { return b(b.points() - 1, l); }

TerminalCondition simple_terminal(const std::string& kind, double T, double c) {
  if (kind == "b_t") {
    return {"b_t", {}, [](const PathTable& b) { return last_value(b, 0); }};
  }
  if (kind == "bt_squared") {
    return {"bt_squared", {}, [](const PathTable& b) {
              const double x = last_value(b, 0);
              return x * x;
            }};
  }
  if (kind == "exp_martingale") {
    return {"exp_martingale", {}, [T](const PathTable& b) {
              return std::exp(last_value(b, 0) - 0.5 * T);
            }};
  }
  if (kind == "constant") {
    return {"constant", {}, [c](const PathTable&) { return c; }};
  }
  if (kind == "running_max") return running_max_terminal(T);
  throw std::invalid_argument("unknown payoff '" + kind + "'");
}

MarketModel single_asset(const ProblemConfig& cfg, double r_default) {
  const double r = cfg.r.value_or(r_default);
  return make_market(filled(1, cfg.s0.value_or(1.0)), filled(1, r),
                     filled(1, cfg.sigma.value_or(0.2)),
                     Eigen::MatrixXd::Identity(1, 1), r, cfg.R.value_or(r),
                     cfg.strike.value_or(0.9), cfg.barrier.value_or(0.85));
}

MarketModel example3_market(const ProblemConfig& cfg) {
  const int d = cfg.dims > 0 ? cfg.dims : 5;
  std::vector<double> mu = cfg.mu.value_or(std::vector<double>{0.02, 0.01, 0.05, 0.03, 0.05});
  std::vector<double> sig = cfg.sigmas.value_or(std::vector<double>{0.2, 0.25, 0.18, 0.22, 0.5});
  if (static_cast<int>(mu.size()) != d || static_cast<int>(sig.size()) != d) {
    throw std::invalid_argument("example3: mu and sigmas need " + std::to_string(d) +
                                " entries");
  }
  return make_market(filled(d, cfg.s0.value_or(1.0)),
                     Eigen::Map<Eigen::VectorXd>(mu.data(), d),
                     Eigen::Map<Eigen::VectorXd>(sig.data(), d),
                     equicorrelation(d, cfg.rho.value_or(0.3)),
                     cfg.r.value_or(0.02), cfg.R.value_or(0.1),
                     cfg.strike.value_or(0.9), cfg.barrier.value_or(0.0));
}

}  // namespace

Problem make_problem(const ProblemConfig& cfg) {
  const double T = cfg.horizon;
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  Problem p;
  p.id = cfg.id;
  p.horizon = T;
  if (cfg.id == "example1" || cfg.id == "vanilla_call") {
    const auto m = single_asset(cfg, 0.01);
    const bool barrier = cfg.id == "example1";
    p.driver = driver_linear(m.r);
    p.discount = m.r;
    p.market = m;
    p.terminal_for = [T, barrier](const MarketModel& mm) {
      return barrier ? barrier_terminal(mm, T) : vanilla_terminal(mm);
    };
    p.terminal = p.terminal_for(m);
  } else if (cfg.id == "example2") {
    p.driver = driver_cos();
    p.terminal = running_max_terminal(T);
  } else if (cfg.id == "example3") {
    const auto m = example3_market(cfg);
    p.dims = m.dims();
    p.driver = driver_borrowing(m, cfg.transpose_borrowing);
    p.market = m;
    p.terminal_for = [](const MarketModel& mm) { return max_call_terminal(mm); };
    p.terminal = p.terminal_for(m);
  } else if (cfg.id == "bt_squared") {
    p.driver = driver_zero();
    p.terminal = simple_terminal("bt_squared", T, 0.0);
  } else if (cfg.id == "constant") {
    p.driver = driver_zero();
    p.terminal = simple_terminal("constant", T, cfg.constant);
  } else if (cfg.id == "custom") {
    p.dims = cfg.dims > 0 ? cfg.dims : 1;
    const bool market_payoff = cfg.payoff == "vanilla_call" ||
                               cfg.payoff == "barrier_call" ||
                               cfg.payoff == "max_call";
    const bool market_driver = cfg.driver == "borrowing";
    if (market_payoff || market_driver) {
      p.market = p.dims == 1 ? single_asset(cfg, 0.01) : example3_market(cfg);
      if (p.market->dims() != p.dims) {
        throw std::invalid_argument("custom: market dimension mismatch");
      }
    }
    if (cfg.driver == "zero") {
      p.driver = driver_zero();
    } else if (cfg.driver == "linear") {
      p.driver = driver_linear(cfg.driver_rate);
      p.discount = cfg.driver_rate;
    } else if (cfg.driver == "cos") {
      p.driver = driver_cos();
    } else if (cfg.driver == "borrowing") {
      p.driver = driver_borrowing(*p.market, cfg.transpose_borrowing);
    } else {
      throw std::invalid_argument("unknown driver '" + cfg.driver + "'");
    }
    if (market_payoff) {
      const std::string kind = cfg.payoff;
      p.terminal_for = [kind, T](const MarketModel& mm) {
        if (kind == "vanilla_call") return vanilla_terminal(mm);
        if (kind == "barrier_call") return barrier_terminal(mm, T);
        return max_call_terminal(mm);
      };
      p.terminal = p.terminal_for(*p.market);
    } else {
      p.terminal = simple_terminal(cfg.payoff, T, cfg.constant);
    }
  } else {
    throw std::invalid_argument("unknown problem '" + cfg.id + "'");
  }
  if (p.id != "custom" && p.id != "example3" && cfg.dims > 1) {
    throw std::invalid_argument("problem '" + cfg.id + "' is one-dimensional");
  }
  return p;
}

}  // namespace chaosbsde
