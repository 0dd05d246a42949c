#include "chaosbsde/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "chaosbsde/brownian.hpp"
#include "chaosbsde/grids.hpp"
#include "chaosbsde/parallel.hpp"

namespace chaosbsde {

namespace {

constexpr std::size_t kChunk = 8192;

// Welford running moments, merged with Chan's pairwise update.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    n += o.n;
  }
  OracleEstimate estimate(double scale) const {
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {scale * mean, std::abs(scale) * std::sqrt(var / static_cast<double>(n)), n};
  }
};

PathTable path_of(const BrownianBatch& batch, std::size_t n) {
  std::vector<double> v(batch.times().size() * static_cast<std::size_t>(batch.dims()));
  batch.path(n, v);
  return PathTable(std::vector<double>(batch.times().begin(), batch.times().end()),
                   batch.dims(), std::move(v));
}

std::vector<double> oracle_grid(const Problem& p) {
  const std::vector<double> ends{0.0, p.horizon};
  return merge_points(ends, p.terminal.monitoring);
}

MarketModel risk_neutral(const MarketModel& m) {
  return make_market(m.s0, Eigen::VectorXd::Constant(m.dims(), m.r), m.sigma,
                     m.correlation, m.r, m.R, m.strike, m.barrier);
}

// Runs sample(batch, n, out) over N paths in fixed chunks; one Moments per
// output component, merged in chunk order.
template <class Fn>
std::vector<Moments> simulate(const Problem& p, std::size_t N, std::uint64_t seed,
                              std::uint32_t tag, int threads, std::size_t outputs,
                              Fn&& sample) {
  if (N < 1) throw std::invalid_argument("oracle: N must be >= 1");
  const auto times = oracle_grid(p);
  const std::size_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<std::vector<Moments>> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t count = std::min(kChunk, N - first);
    const auto batch =
        sample_batch(times, p.dims, count, seed, {StreamRole::oracle, tag}, first);
    std::vector<Moments> acc(outputs);
    std::vector<double> out(outputs);
    for (std::size_t n = 0; n < count; ++n) {
      sample(path_of(batch, n), out);
      for (std::size_t k = 0; k < outputs; ++k) acc[k].add(out[k]);
    }
    parts[c] = std::move(acc);
  });
  std::vector<Moments> total(outputs);
  for (const auto& part : parts) {
    for (std::size_t k = 0; k < outputs; ++k) total[k].merge(part[k]);
  }
  return total;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bs_call_price(double s0, double strike, double r, double sigma, double T) {
  const double vt = sigma * std::sqrt(T);
  const double fwd_strike = strike * std::exp(-r * T);
  if (strike <= 0.0) return s0 - fwd_strike;
  if (vt <= 0.0) return std::max(s0 - fwd_strike, 0.0);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * T) / vt;
  return s0 * normal_cdf(d1) - fwd_strike * normal_cdf(d1 - vt);
}

double bs_call_delta(double s0, double strike, double r, double sigma, double T) {
  const double vt = sigma * std::sqrt(T);
  if (vt <= 0.0) return s0 > strike * std::exp(-r * T) ? 1.0 : 0.0;
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * T) / vt;
  return normal_cdf(d1);
}

OracleEstimate mc_price(const Problem& problem, std::size_t N,
                        std::uint64_t seed, int threads) {
  TerminalCondition xi = problem.terminal;
  if (problem.market && problem.terminal_for) {
    xi = problem.terminal_for(risk_neutral(*problem.market));
  }
  const auto m = simulate(problem, N, seed, 0, threads, 1,
                          [&](const PathTable& b, std::vector<double>& out) {
                            out[0] = xi(b);
                          });
  return m[0].estimate(std::exp(-problem.discount * problem.horizon));
}

std::vector<OracleEstimate> mc_delta(const Problem& problem, std::size_t N,
                                     double bump, std::uint64_t seed,
                                     int threads) {
  if (!problem.market || !problem.terminal_for) {
    throw std::invalid_argument("mc_delta: problem '" + problem.id +
                                "' has no market model");
  }
  if (!(bump > 0.0)) throw std::invalid_argument("mc_delta: bump must be positive");
  const MarketModel base = risk_neutral(*problem.market);
  const int d = base.dims();
  std::vector<TerminalCondition> up, down;
  for (int j = 0; j < d; ++j) {
    MarketModel a = base, b = base;
    a.s0[j] *= 1.0 + bump;
    b.s0[j] *= 1.0 - bump;
    up.push_back(problem.terminal_for(a));
    down.push_back(problem.terminal_for(b));
  }
  const double disc = std::exp(-problem.discount * problem.horizon);
  const Eigen::MatrixXd A = base.vol.transpose() * base.s0.asDiagonal();
  const auto m = simulate(
      problem, N, seed, 1, threads, static_cast<std::size_t>(d),
      [&](const PathTable& path, std::vector<double>& out) {
        Eigen::VectorXd g(d);
        for (int j = 0; j < d; ++j) {
          g[j] = disc * (up[static_cast<std::size_t>(j)](path) -
                         down[static_cast<std::size_t>(j)](path)) /
                 (2.0 * bump * base.s0[j]);
        }
        const Eigen::VectorXd z = A * g;
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = z[j];
      });
  std::vector<OracleEstimate> out;
  for (const auto& mm : m) out.push_back(mm.estimate(1.0));
  return out;
}

OracleEstimate nested_ce(const PathTable& prefix, std::span<const double> future,
                         std::size_t N,
                         const std::function<double(const PathTable&)>& functional,
                         std::uint64_t seed, std::uint32_t tag) {
  if (N < 1) throw std::invalid_argument("nested_ce: N must be >= 1");
  const double t = prefix.times().back();
  const int d = prefix.dims();
  std::vector<double> shifted{0.0};
  for (const double s : future) {
    if (!(s > t)) throw std::invalid_argument("nested_ce: future times must exceed t");
    shifted.push_back(s - t);
  }
  std::vector<double> times(prefix.times().begin(), prefix.times().end());
  times.insert(times.end(), future.begin(), future.end());
  const std::size_t np = prefix.points();
  std::vector<double> values(times.size() * static_cast<std::size_t>(d));
  std::copy(prefix.values().begin(), prefix.values().end(), values.begin());
  Moments acc;
  for (std::size_t c0 = 0; c0 < N; c0 += kChunk) {
    const std::size_t count = std::min(kChunk, N - c0);
    const auto batch = sample_batch(shifted, d, count, seed, {StreamRole::oracle, tag}, c0);
    for (std::size_t n = 0; n < count; ++n) {
      for (std::size_t k = 0; k < future.size(); ++k) {
        for (int l = 0; l < d; ++l) {
          values[(np + k) * d + l] =
              prefix(np - 1, l) + batch.value(n, l, static_cast<int>(k) + 1);
        }
      }
      acc.add(functional(PathTable(times, d, values)));
    }
  }
  return acc.estimate(1.0);
}

}  // namespace chaosbsde
