#include "chaosbsde/schemes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "chaosbsde/brownian.hpp"
#include "chaosbsde/hermite.hpp"
#include "chaosbsde/parallel.hpp"

namespace chaosbsde {

namespace {

constexpr std::size_t kChunk = 4096;

std::size_t block_size(const IndexSet& set) {
  return set.size() <= 16384 ? 32 : 8;
}

void validate(const EulerParams& p, const Problem& problem) {
  if (p.m < 1) throw std::invalid_argument("m must be >= 1");
  if (p.M < 1) throw std::invalid_argument("M must be >= 1");
  if (p.P < 0) throw std::invalid_argument("P must be >= 0");
  if (p.N < 2) throw std::invalid_argument("N must be >= 2");
  if (problem.dims < 1) throw std::invalid_argument("problem dimension must be >= 1");
}

PathTable path_of(const BrownianBatch& batch, std::size_t n) {
  std::vector<double> v(batch.times().size() * static_cast<std::size_t>(batch.dims()));
  batch.path(n, v);
  return PathTable(std::vector<double>(batch.times().begin(), batch.times().end()),
                   batch.dims(), std::move(v));
}

double sample_terminal(const Problem& problem, const BrownianBatch& batch,
                       std::size_t n) {
  const double xi = problem.terminal(path_of(batch, n));
  if (!std::isfinite(xi)) {
    throw std::domain_error("terminal condition is not finite at sample " +
                            std::to_string(batch.first_sample() + n));
  }
  return xi;
}

struct Scratch {
  std::vector<double> a, b, c, d;
};

// Runs `values` over [0, N) in fixed chunks of fresh samples and returns the
// accumulator of values * H_a merged in chunk order. `values` receives the
// batch, the local range, the per-position Hermite tables and the basis
// products of the block, and writes one value per sample.
template <class Fn>
CoefficientAccumulator estimate_chunks(const IndexSet& set,
                                       const RefinedGrid& rg,
                                       std::span<const double> sampling,
                                       std::size_t N, std::uint64_t seed,
                                       StreamLabel label, int threads,
                                       bool squares, Fn&& values) {
  const std::size_t chunks = (N + kChunk - 1) / kChunk;
  const auto plan = ProductPlan::full(set);
  const CellMap map(rg, sampling);
  const std::size_t B = block_size(set);
  const auto width = static_cast<std::size_t>(set.width());
  const auto row = static_cast<std::size_t>(set.max_order() + 1);
  std::vector<std::optional<CoefficientAccumulator>> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t count = std::min(kChunk, N - first);
    const auto batch = sample_batch(sampling, set.dims(), count, seed, label, first);
    CoefficientAccumulator acc(set.size(), squares);
    std::vector<double> inc(width * B), tables(width * row * B),
        prod(plan.size() * B), f(B);
    Scratch scratch;
    for (std::size_t n0 = 0; n0 < count; n0 += B) {
      const std::size_t b = std::min(B, count - n0);
      for (int l = 0; l < set.dims(); ++l) {
        for (int j = 0; j < set.cells(); ++j) {
          const auto p = static_cast<std::size_t>(l * set.cells() + j);
          for (std::size_t s = 0; s < b; ++s) {
            inc[p * b + s] = map.increment(batch, n0 + s, l, j);
          }
        }
      }
      hermite_tables(set.max_order(), set.width(), inc, b, tables);
      plan.products(tables, b, prod);
      values(batch, n0, b, std::span<const double>(tables), std::span<const double>(prod),
             std::span<double>(f.data(), b), scratch);
      acc.add_block(prod, std::span<const double>(f.data(), b), b);
    }
    parts[c].emplace(std::move(acc));
  });
  CoefficientAccumulator total(set.size(), squares);
  for (auto& p : parts) total.merge(*p);
  return total;
}

std::vector<double> mean_coefficients(const IndexSet& set,
                                      const CoefficientAccumulator& acc,
                                      double scale) {
  std::vector<double> out(set.size());
  const auto n = static_cast<double>(acc.samples());
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = scale * set.factorial(r) * acc.sums()[r] / n;
  }
  return out;
}

// y[s] += sum_k w[k] prod[k * B + s]
void weighted_sum(std::span<const double> w, std::span<const double> prod,
                  std::size_t B, std::size_t b, double* y) {
  std::fill(y, y + b, 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double wk = w[k];
    if (wk == 0.0) continue;
    const double* p = prod.data() + k * B;
    for (std::size_t s = 0; s < b; ++s) y[s] += wk * p[s];
  }
}

std::vector<double> first_cell_z(const ChaosCoefficients& c,
                                 const RefinedGrid& rg) {
  const auto& set = c.index_set();
  std::vector<double> z(static_cast<std::size_t>(set.dims()), 0.0);
  for (int g = 0; g < set.dims(); ++g) {
    if (const auto r = set.raised(0, g * set.cells())) {
      z[static_cast<std::size_t>(g)] = c[*r] / std::sqrt(rg.width(1));
    }
  }
  return z;
}

class SetCache {
 public:
  SetCache(int P, int d, std::uint64_t cap) : P_(P), d_(d), cap_(cap) {}
  std::shared_ptr<const IndexSet> get(int cells) {
    auto& s = sets_[cells];
    if (!s) s = std::make_shared<const IndexSet>(P_, cells, d_, cap_);
    return s;
  }

 private:
  int P_, d_;
  std::uint64_t cap_;
  std::map<int, std::shared_ptr<const IndexSet>> sets_;
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

void check_coefficients(const std::vector<double>& c, int step) {
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (!std::isfinite(c[r])) {
      throw std::domain_error("non-finite chaos coefficient at step " +
                              std::to_string(step) + " (rank " + std::to_string(r) + ")");
    }
  }
}

}  // namespace

BsdeResult run_euler(const Problem& problem, const EulerParams& params) {
  validate(params, problem);
  const auto t0 = std::chrono::steady_clock::now();
  const int m = params.m;
  const int d = problem.dims;
  auto grid = std::make_shared<const TimeGrid>(TimeGrid::uniform(problem.horizon, m));
  std::vector<RefinedGrid> rgs;
  rgs.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) rgs.push_back(build_refined_grid(*grid, params.M, i));
  SetCache sets(params.P, d, params.index_cap);

  BsdeResult result;
  result.grid = grid;
  result.M = params.M;

  // Terminal projection d^xi on pi_m and the monitoring times.
  const RefinedGrid& rg_m = rgs.back();
  auto set_m = sets.get(rg_m.cells());
  const auto sampling = merge_points(rg_m.points(), problem.terminal.monitoring);
  const auto acc_xi = estimate_chunks(
      *set_m, rg_m, sampling, params.N, params.seed, {StreamRole::terminal, 0},
      params.threads, params.variance,
      [&](const BrownianBatch& batch, std::size_t n0, std::size_t b,
          std::span<const double>, std::span<const double>, std::span<double> f,
          Scratch&) {
        for (std::size_t s = 0; s < b; ++s) f[s] = sample_terminal(problem, batch, n0 + s);
      });
  auto dxi = mean_coefficients(*set_m, acc_xi, 1.0);
  check_coefficients(dxi, m);
  ChaosCoefficients next(set_m, m, std::move(dxi));
  result.steps.push_back({m, rg_m.cells(), set_m->size(), next.second_moment(),
                          params.variance ? variance_diagnostic(*set_m, acc_xi) : 0.0});
  if (params.retain) result.terminal = next;

  std::vector<ChaosCoefficients> kept;
  for (int i = m; i >= 1; --i) {
    const RefinedGrid& rg = rgs[static_cast<std::size_t>(i - 1)];
    auto set = sets.get(rg.cells());
    const double t_i = grid->time(i);
    const double dt = grid->step(i);
    std::vector<double> wY;
    std::vector<std::vector<double>> wZ;
    if (i == m) {
      wY.assign(next.values().begin(), next.values().end());
    } else {
      const RefinedGrid& rg_next = rgs[static_cast<std::size_t>(i)];
      wY = propagate_weights(next.values(), next.index_set(), rg_next, *set, rg);
      const int u = rg_next.locate(t_i);
      for (int g = 0; g < d; ++g) {
        const auto w = zbar_weights(next, rg_next, t_i, u, g);
        wZ.push_back(propagate_weights(w, next.index_set(), rg_next, *set, rg));
      }
    }
    std::vector<double> di = wY;
    double variance = 0.0;
    if (!problem.driver.zero) {
      const std::size_t B = block_size(*set);
      const auto acc = estimate_chunks(
          *set, rg, rg.points(), params.N, params.seed,
          {StreamRole::step, static_cast<std::uint32_t>(i)}, params.threads,
          params.variance,
          [&](const BrownianBatch& batch, std::size_t n0, std::size_t b,
              std::span<const double>, std::span<const double> prod,
              std::span<double> f, Scratch& sc) {
            sc.a.resize(B);
            sc.b.resize(static_cast<std::size_t>(d) * B, 0.0);
            sc.c.resize(static_cast<std::size_t>(d));
            weighted_sum(wY, prod, b, b, sc.a.data());
            for (int g = 0; g < d; ++g) {
              double* z = sc.b.data() + static_cast<std::size_t>(g) * B;
              if (wZ.empty()) {
                std::fill(z, z + b, 0.0);
              } else {
                weighted_sum(wZ[static_cast<std::size_t>(g)], prod, b, b, z);
              }
            }
            for (std::size_t s = 0; s < b; ++s) {
              for (int g = 0; g < d; ++g) {
                sc.c[static_cast<std::size_t>(g)] = sc.b[static_cast<std::size_t>(g) * B + s];
              }
              const double v = problem.driver(t_i, sc.a[s], sc.c);
              if (!std::isfinite(v)) {
                throw std::domain_error(
                    "driver returned a non-finite value at step " + std::to_string(i) +
                    ", sample " + std::to_string(batch.first_sample() + n0 + s) +
                    " (y = " + std::to_string(sc.a[s]) + ")");
              }
              f[s] = v;
            }
          });
      const auto corr = mean_coefficients(*set, acc, dt);
      for (std::size_t r = 0; r < di.size(); ++r) di[r] += corr[r];
      if (params.variance) variance = dt * dt * variance_diagnostic(*set, acc);
    }
    check_coefficients(di, i);
    next = ChaosCoefficients(set, i, std::move(di));
    result.steps.push_back({i, rg.cells(), set->size(), next.second_moment(), variance});
    if (params.retain) kept.push_back(next);
  }
  result.y0 = next.constant();
  result.z0 = first_cell_z(next, rgs.front());
  if (params.retain) {
    std::reverse(kept.begin(), kept.end());
    result.coefficients = std::move(kept);
  }
  result.wall_ms = elapsed_ms(t0);
  return result;
}

namespace {

struct PicardNode {
  double t = 0.0;
  double dt = 0.0;  // Delta_{k+1}
  int cell = 1;     // right convention
  double ratio = 0.0;
  int sample_t = 0;     // index of t in the sampling grid
  int sample_prev = 0;  // index of s_{cell-1}
  ProductPlan plan;
};

}  // namespace

BsdeResult run_picard(const Problem& problem, const PicardParams& params) {
  validate(params, problem);
  if (params.Q < 1) throw std::invalid_argument("Q must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const int m = params.m;
  const int d = problem.dims;
  const auto du = static_cast<std::size_t>(d);
  auto grid = std::make_shared<const TimeGrid>(TimeGrid::uniform(problem.horizon, m));
  const RefinedGrid rg = build_refined_grid(*grid, params.M, m);
  auto set = std::make_shared<const IndexSet>(params.P, rg.cells(), d, params.index_cap);
  const int P = set->max_order();
  const auto row = static_cast<std::size_t>(P + 1);
  const auto sampling = merge_points(merge_points(rg.points(), grid->points()),
                                     problem.terminal.monitoring);
  const BrownianBatch probe(sampling, d, 0, 0);

  std::vector<PicardNode> nodes(static_cast<std::size_t>(m));
  const auto pts = rg.points();
  for (int k = 0; k < m; ++k) {
    auto& nd = nodes[static_cast<std::size_t>(k)];
    nd.t = grid->time(k);
    nd.dt = grid->step(k + 1);
    if (k == 0) {
      nd.cell = 1;
      nd.t = 0.0;
    } else {
      const double tol = 64.0 * std::numeric_limits<double>::epsilon() * problem.horizon;
      nd.cell = static_cast<int>(std::upper_bound(pts.begin(), pts.end(), nd.t + tol) -
                                 pts.begin());
    }
    const double span = nd.t - rg.point(nd.cell - 1);
    nd.ratio = span > 0.0 ? span / rg.width(nd.cell) : 0.0;
    nd.sample_t = probe.point_index(nd.t);
    nd.sample_prev = probe.point_index(rg.point(nd.cell - 1));
    nd.plan = ProductPlan::support_at_most(*set, nd.ratio > 0.0 ? nd.cell : nd.cell - 1);
  }

  BsdeResult result;
  result.grid = grid;
  result.M = params.M;
  std::vector<ChaosCoefficients> iterates;
  const std::size_t B = block_size(*set);

  for (int q = 0; q < params.Q; ++q) {
    // Weights of iterate p at node k, in plan order: Y then Z_1..Z_d.
    std::vector<std::vector<std::vector<double>>> wts(static_cast<std::size_t>(q));
    for (int p = 0; p < q; ++p) {
      const auto& c = iterates[static_cast<std::size_t>(p)];
      auto& per = wts[static_cast<std::size_t>(p)];
      for (const auto& nd : nodes) {
        std::vector<double> w = nd.plan.gather(c.values());
        const double scale = 1.0 / std::sqrt(rg.width(nd.cell));
        for (int g = 0; g < d; ++g) {
          const int pos = g * set->cells() + nd.cell - 1;
          for (std::size_t k = 0; k < nd.plan.size(); ++k) {
            const auto up = set->raised(nd.plan.rank(k), pos);
            w.push_back(up ? scale * c[*up] : 0.0);
          }
        }
        per.push_back(std::move(w));
      }
    }
    const auto acc = estimate_chunks(
        *set, rg, sampling, params.N, params.seed,
        {StreamRole::picard, static_cast<std::uint32_t>(q)}, params.threads,
        params.variance,
        [&](const BrownianBatch& batch, std::size_t n0, std::size_t b,
            std::span<const double> tables, std::span<const double>,
            std::span<double> F, Scratch& sc) {
          const auto mm = static_cast<std::size_t>(m);
          const auto qq = static_cast<std::size_t>(q);
          // sc.a: Y[p][k][s] for p = 0..q; sc.b: Z[p][k][g][s]
          sc.a.assign((qq + 1) * mm * B, 0.0);
          sc.b.assign((qq + 1) * mm * du * B, 0.0);
          sc.d.resize(set->size() * B + row * B * du + row);
          double* prod = sc.d.data();
          double* saved = prod + set->size() * B;
          double* h = saved + row * B * du;
          std::vector<double>& work = sc.c;
          if (q > 0) work.assign(tables.begin(), tables.end());
          for (std::size_t k = 0; q > 0 && k < mm; ++k) {
            const auto& nd = nodes[k];
            const auto r = static_cast<std::size_t>(nd.cell - 1);
            if (nd.ratio > 0.0) {
              const double root = std::sqrt(nd.t - rg.point(nd.cell - 1));
              for (std::size_t l = 0; l < du; ++l) {
                double* rowp = work.data() + ((l * set->cells() + r) * row) * b;
                std::copy(rowp, rowp + row * b, saved + l * row * B);
                for (std::size_t s = 0; s < b; ++s) {
                  const double x = (batch.value(n0 + s, static_cast<int>(l), nd.sample_t) -
                                    batch.value(n0 + s, static_cast<int>(l), nd.sample_prev)) /
                                   root;
                  hermite_all(P, x, std::span<double>(h, row));
                  for (std::size_t e = 0; e < row; ++e) {
                    rowp[e * b + s] = half_power(nd.ratio, static_cast<int>(e)) * h[e];
                  }
                }
              }
            }
            nd.plan.products(work, b, std::span<double>(prod, nd.plan.size() * b));
            const std::size_t ps = nd.plan.size();
            for (std::size_t p = 1; p <= qq; ++p) {
              const auto& w = wts[p - 1][k];
              weighted_sum(std::span<const double>(w.data(), ps),
                           std::span<const double>(prod, ps * b), b, b,
                           sc.a.data() + (p * mm + k) * B);
              for (std::size_t g = 0; g < du; ++g) {
                weighted_sum(std::span<const double>(w.data() + (g + 1) * ps, ps),
                             std::span<const double>(prod, ps * b), b, b,
                             sc.b.data() + ((p * mm + k) * du + g) * B);
              }
            }
            if (nd.ratio > 0.0) {
              for (std::size_t l = 0; l < du; ++l) {
                double* rowp = work.data() + ((l * set->cells() + r) * row) * b;
                std::copy(saved + l * row * B, saved + l * row * B + row * b, rowp);
              }
            }
          }
          std::vector<double> z(du);
          auto drift = [&](std::size_t p, std::size_t k, std::size_t s) {
            for (std::size_t g = 0; g < du; ++g) z[g] = sc.b[((p * mm + k) * du + g) * B + s];
            const double y = sc.a[(p * mm + k) * B + s];
            const double v = problem.driver(nodes[k].t, y, z);
            if (!std::isfinite(v)) {
              throw std::domain_error("driver returned a non-finite value at iteration " +
                                      std::to_string(q) + ", sample " +
                                      std::to_string(batch.first_sample() + n0 + s));
            }
            return nodes[k].dt * v;
          };
          for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t p = 1; p <= qq; ++p) {
              double integral = 0.0;
              for (std::size_t k = 0; k < mm; ++k) {
                sc.a[(p * mm + k) * B + s] -= integral;
                integral += drift(p - 1, k, s);
              }
            }
            double total = 0.0;
            for (std::size_t k = 0; k < mm; ++k) total += drift(qq, k, s);
            F[s] = sample_terminal(problem, batch, n0 + s) + total;
          }
        });
    auto c = mean_coefficients(*set, acc, 1.0);
    check_coefficients(c, q + 1);
    iterates.emplace_back(set, m, std::move(c));
    result.steps.push_back({q + 1, rg.cells(), set->size(),
                            iterates.back().second_moment(),
                            params.variance ? variance_diagnostic(*set, acc) : 0.0});
  }
  result.y0 = iterates.back().constant();
  result.z0 = first_cell_z(iterates.back(), rg);
  if (params.retain) result.coefficients = std::move(iterates);
  result.wall_ms = elapsed_ms(t0);
  return result;
}

TrajectoryTable simulate_solution_paths(const BsdeResult& result,
                                        const Problem& problem, std::size_t K,
                                        std::uint64_t seed) {
  if (!result.grid || !result.terminal ||
      result.coefficients.size() != static_cast<std::size_t>(result.grid->steps())) {
    throw std::logic_error(
        "per-step coefficients were not retained; rerun run_euler with retain = true");
  }
  const auto& grid = *result.grid;
  const int m = grid.steps();
  const int d = problem.dims;
  std::vector<RefinedGrid> rgs;
  for (int i = 1; i <= m; ++i) rgs.push_back(build_refined_grid(grid, result.M, i));
  const auto sampling = merge_points(rgs.back().points(), grid.points());
  const auto batch = sample_batch(sampling, d, K, seed, {StreamRole::evaluation, 0});
  TrajectoryTable out;
  out.dims = d;
  out.hedge = problem.market.has_value();
  Eigen::VectorXd drift;
  if (out.hedge) {
    const auto& mk = *problem.market;
    drift = mk.mu - 0.5 * (mk.vol * mk.vol.transpose()).diagonal();
  }
  for (std::size_t n = 0; n < K; ++n) {
    for (int k = 0; k <= m; ++k) {
      const double t = grid.time(k);
      double y;
      std::vector<double> z;
      if (k < m) {
        const auto& rg = rgs[static_cast<std::size_t>(k)];
        const auto& c = result.coefficients[static_cast<std::size_t>(k)];
        const auto pt = make_eval_point(rg, batch, n, t, CellSide::right);
        y = eval_Y(c, rg, pt);
        z = eval_Z(c, rg, pt);
      } else {
        const auto pt = make_eval_point(rgs.back(), batch, n, t, CellSide::left);
        y = eval_Y(*result.terminal, rgs.back(), pt);
        z = eval_Z(*result.terminal, rgs.back(), pt);
      }
      std::vector<double> rowv{static_cast<double>(n), t, y};
      rowv.insert(rowv.end(), z.begin(), z.end());
      if (out.hedge) {
        const auto& mk = *problem.market;
        Eigen::VectorXd b(d);
        for (int l = 0; l < d; ++l) b[l] = batch.value_at(n, l, t);
        const Eigen::VectorXd x = drift * t + mk.vol * b;
        Eigen::VectorXd S(d);
        for (int l = 0; l < d; ++l) S[l] = mk.s0[l] * std::exp(x[l]);
        const Eigen::MatrixXd A = mk.vol.transpose() * S.asDiagonal();
        const Eigen::VectorXd H =
            A.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(z.data(), d));
        for (int l = 0; l < d; ++l) rowv.push_back(H[l]);
      }
      out.rows.push_back(std::move(rowv));
    }
  }
  return out;
}

}  // namespace chaosbsde
