#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "chaosbsde/chaos.hpp"
#include "chaosbsde/hermite.hpp"
#include "json.hpp"

using namespace chaosbsde;

namespace {

std::shared_ptr<const IndexSet> make_set(int P, int M, int d) {
  return std::make_shared<const IndexSet>(P, M, d);
}

RefinedGrid lattice(int M, double T = 1.0) {
  return build_refined_grid(build_time_grid(T, 1), M, 1);
}

// Exact coefficients of B_T (coordinate 0).
ChaosCoefficients bt_coefficients(std::shared_ptr<const IndexSet> set,
                                  const RefinedGrid& rg) {
  std::vector<double> c(set->size(), 0.0);
  for (int j = 0; j < set->cells(); ++j) c[*set->raised(0, j)] = std::sqrt(rg.width(j + 1));
  return ChaosCoefficients(set, rg.step(), c);
}

// Exact coefficients of B_T^2 in one dimension.
ChaosCoefficients bt2_coefficients(std::shared_ptr<const IndexSet> set,
                                   const RefinedGrid& rg) {
  std::vector<double> c(set->size(), 0.0);
  c[0] = rg.end();
  const int M = set->cells();
  for (int j = 0; j < M; ++j) {
    const auto ej = *set->raised(0, j);
    c[*set->raised(ej, j)] = 2.0 * rg.width(j + 1);
    for (int k = j + 1; k < M; ++k) {
      c[*set->raised(ej, k)] = 2.0 * std::sqrt(rg.width(j + 1) * rg.width(k + 1));
    }
  }
  return ChaosCoefficients(set, rg.step(), c);
}

ChaosCoefficients random_coefficients(std::shared_ptr<const IndexSet> set, int step,
                                      unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> c(set->size());
  for (auto& x : c) x = nd(gen);
  return ChaosCoefficients(set, step, c);
}

}  // namespace

TEST(BasisProducts, SmallIndices) {
  const auto set = make_set(2, 3, 1);
  const auto rg = lattice(3);
  const auto batch = sample_batch(rg.points(), 1, 5, 3, {StreamRole::evaluation, 0});
  for (std::size_t n = 0; n < 5; ++n) {
    const auto h = eval_basis_products(*set, batch, rg, n);
    EXPECT_EQ(h[0], 1.0);
    for (int j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(h[*set->raised(0, j)], batch.increment(n, 0, j));
    }
    const auto e01 = *set->raised(*set->raised(0, 0), 1);
    EXPECT_DOUBLE_EQ(h[e01], batch.increment(n, 0, 0) * batch.increment(n, 0, 1));
    const auto e22 = *set->raised(*set->raised(0, 2), 2);
    EXPECT_DOUBLE_EQ(h[e22], hermite(2, batch.increment(n, 0, 2)));
  }
}

TEST(BasisProducts, FinerSamplingGrid) {
  const auto set = make_set(2, 2, 2);
  const auto rg = lattice(2);
  const std::vector<double> fine{0.0, 0.2, 0.5, 0.7, 1.0};
  const auto batch = sample_batch(fine, 2, 3, 3, {StreamRole::evaluation, 1});
  for (std::size_t n = 0; n < 3; ++n) {
    const auto h = eval_basis_products(*set, batch, rg, n);
    for (int l = 0; l < 2; ++l) {
      const double g0 = batch.value_at(n, l, 0.5) / std::sqrt(0.5);
      const double g1 = (batch.value_at(n, l, 1.0) - batch.value_at(n, l, 0.5)) / std::sqrt(0.5);
      EXPECT_NEAR(h[*set->raised(0, l * 2)], g0, 1e-14);
      EXPECT_NEAR(h[*set->raised(0, l * 2 + 1)], g1, 1e-14);
    }
  }
}

TEST(ProjectTerminal, Constant) {
  const auto set = make_set(2, 4, 1);
  const auto rg = lattice(4);
  const std::size_t N = 20000;
  const auto batch = sample_batch(rg.points(), 1, N, 11, {StreamRole::terminal, 0});
  const std::vector<double> xi(N, 1.0);
  const auto c = project_terminal(xi, batch, rg, set);
  EXPECT_EQ(c.constant(), 1.0);
  for (std::size_t r = 1; r < c.size(); ++r) {
    EXPECT_LE(std::abs(c[r]), 5.0 * set->factorial(r) / std::sqrt(double(N)));
  }
}

TEST(ProjectTerminal, TerminalBrownianValue) {
  const auto set = make_set(2, 4, 1);
  const auto rg = lattice(4);
  const std::size_t N = 100000;
  const auto batch = sample_batch(rg.points(), 1, N, 12, {StreamRole::terminal, 0});
  std::vector<double> xi(N);
  for (std::size_t n = 0; n < N; ++n) xi[n] = batch.value_at(n, 0, 1.0);
  const auto c = project_terminal(xi, batch, rg, set);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(c[*set->raised(0, j)], 0.5, 5.0 / std::sqrt(double(N)));
  }
}

TEST(ProjectTerminal, ExponentialMartingale) {
  const auto set = make_set(3, 2, 1);
  const auto rg = lattice(2);
  const std::size_t N = 200000;
  const auto batch = sample_batch(rg.points(), 1, N, 13, {StreamRole::terminal, 0});
  std::vector<double> xi(N);
  for (std::size_t n = 0; n < N; ++n) xi[n] = std::exp(batch.value_at(n, 0, 1.0) - 0.5);
  const auto c = project_terminal(xi, batch, rg, set);
  std::vector<double> m2(set->size(), 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const auto h = eval_basis_products(*set, batch, rg, n);
    for (std::size_t r = 0; r < h.size(); ++r) m2[r] += xi[n] * xi[n] * h[r] * h[r];
  }
  for (std::size_t r = 0; r < set->size(); ++r) {
    const auto a = set->at(r);
    const double want = std::pow(0.5, 0.5 * a.order());
    const double tol = 5.0 * set->factorial(r) * std::sqrt(m2[r] / N / N);
    EXPECT_NEAR(c[r], want, tol) << r;
  }
}

TEST(ProjectTerminal, RejectsNonFiniteSample) {
  const auto set = make_set(1, 2, 1);
  const auto rg = lattice(2);
  const auto batch = sample_batch(rg.points(), 1, 10, 1, {StreamRole::terminal, 0});
  std::vector<double> xi(10, 0.0);
  xi[7] = NAN;
  try {
    project_terminal(xi, batch, rg, set);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("sample 7"), std::string::npos);
  }
}

TEST(EvalY, ConstantOnly) {
  const auto set = make_set(3, 4, 2);
  const auto rg = lattice(4);
  std::vector<double> v(set->size(), 0.0);
  v[0] = 2.5;
  const ChaosCoefficients c(set, 1, v);
  const std::vector<double> times{0.0, 0.1, 0.25, 0.6, 1.0};
  const auto batch = sample_batch(merge_points(rg.points(), times), 2, 3, 1,
                                  {StreamRole::evaluation, 0});
  for (double t : times) {
    EXPECT_EQ(eval_Y(c, rg, make_eval_point(rg, batch, 1, t)), 2.5);
    const auto z = eval_Z(c, rg, make_eval_point(rg, batch, 1, t));
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 0.0);
  }
  const auto zb = eval_Zbar(c, rg, make_eval_point(rg, batch, 1, 0.6));
  EXPECT_EQ(zb[0], 0.0);
}

TEST(EvalY, BrownianMartingale) {
  const auto set = make_set(2, 4, 1);
  const auto rg = lattice(4);
  const auto c = bt_coefficients(set, rg);
  const std::vector<double> times{0.1, 0.25, 0.3, 0.5, 0.9, 1.0};
  const auto batch = sample_batch(merge_points(rg.points(), times), 1, 20, 5,
                                  {StreamRole::evaluation, 0});
  for (std::size_t n = 0; n < 20; ++n) {
    for (double t : times) {
      for (auto side : {CellSide::left, CellSide::right}) {
        const auto pt = make_eval_point(rg, batch, n, t, side);
        EXPECT_NEAR(eval_Y(c, rg, pt), batch.value_at(n, 0, t), 1e-13);
        EXPECT_NEAR(eval_Z(c, rg, pt)[0], 1.0, 1e-13);
      }
    }
    EXPECT_EQ(eval_Y(c, rg, make_eval_point(rg, batch, n, 0.0)), 0.0);
  }
}

TEST(EvalZ, SquaredBrownianIsTwiceB) {
  const auto set = make_set(2, 4, 1);
  const auto rg = lattice(4);
  const auto c = bt2_coefficients(set, rg);
  const std::vector<double> times{0.1, 0.25, 0.5, 0.6, 0.75};
  const auto batch = sample_batch(merge_points(rg.points(), times), 1, 20, 6,
                                  {StreamRole::evaluation, 0});
  for (std::size_t n = 0; n < 20; ++n) {
    const double bT = batch.value_at(n, 0, 1.0);
    EXPECT_NEAR(eval_Y(c, rg, make_eval_point(rg, batch, n, 1.0)), bT * bT, 1e-12);
    for (double t : times) {
      const double b = batch.value_at(n, 0, t);
      const auto pt = make_eval_point(rg, batch, n, t);
      EXPECT_NEAR(eval_Z(c, rg, pt)[0], 2.0 * b, 1e-12);
      EXPECT_NEAR(eval_Y(c, rg, pt), b * b + (1.0 - t), 1e-12);
    }
  }
}

TEST(EvalZbar, AveragesOfZ) {
  const auto set = make_set(2, 4, 1);
  const auto rg = lattice(4);
  const std::vector<double> times{0.25, 0.5, 0.6};
  const auto batch = sample_batch(merge_points(rg.points(), times), 1, 10, 8,
                                  {StreamRole::evaluation, 0});
  const auto bt = bt_coefficients(set, rg);
  const auto bt2 = bt2_coefficients(set, rg);
  for (std::size_t n = 0; n < 10; ++n) {
    for (double t : times) {
      for (auto side : {CellSide::left, CellSide::right}) {
        const auto pt = make_eval_point(rg, batch, n, t, side);
        EXPECT_NEAR(eval_Zbar(bt, rg, pt)[0], 1.0, 1e-13);
        // E_t[(1/(1-t)) int_t^1 2 B_s ds] = 2 B_t
        EXPECT_NEAR(eval_Zbar(bt2, rg, pt)[0], 2.0 * batch.value_at(n, 0, t), 1e-12);
      }
    }
    EXPECT_NEAR(eval_Zbar(bt, rg, make_eval_point(rg, batch, n, 0.0))[0], 1.0, 1e-13);
  }
}

TEST(EvalZbar, OneCellFromZero) {
  const auto set = make_set(1, 1, 1);
  const RefinedGrid rg(1, {0.0, 0.5});
  const ChaosCoefficients c(set, 1, {0.3, 0.7});
  const auto batch = sample_batch(rg.points(), 1, 1, 1, {StreamRole::evaluation, 0});
  const auto z = eval_Zbar(c, rg, make_eval_point(rg, batch, 0, 0.0));
  EXPECT_NEAR(z[0], 0.7 / std::sqrt(0.5), 1e-15);
}

TEST(Propagate, LatticeEndIsRestriction) {
  const auto g = build_time_grid(1.0, 2);
  const auto rg1 = build_refined_grid(g, 4, 1), rg2 = build_refined_grid(g, 4, 2);
  const auto s1 = make_set(2, 2, 1), s2 = make_set(2, 4, 1);
  const auto next = random_coefficients(s2, 2, 1);
  const auto c = propagate_Y_coefficients(next, rg2, rg1, s1);
  for (std::size_t r = 0; r < s1->size(); ++r) {
    EXPECT_EQ(c[r], next[s2->rank(pad_index(s1->at(r), 4))]);
  }
}

TEST(Propagate, ConstantUnchangedAndPartialCellScaling) {
  const auto g = build_time_grid(1.0, 4);
  const auto rg1 = build_refined_grid(g, 2, 1), rg2 = build_refined_grid(g, 2, 2);
  ASSERT_EQ(rg1.cells(), 1);
  ASSERT_EQ(rg2.cells(), 1);
  const auto s = make_set(2, 1, 1);
  const ChaosCoefficients only0(s, 2, {1.5, 0.0, 0.0});
  const auto a = propagate_Y_coefficients(only0, rg2, rg1, s);
  EXPECT_EQ(a[0], 1.5);
  EXPECT_EQ(a[1], 0.0);
  const ChaosCoefficients sq(s, 2, {0.0, 0.0, 0.8});
  const auto b = propagate_Y_coefficients(sq, rg2, rg1, s);
  EXPECT_NEAR(b[2], 0.4, 1e-16);
}

// Propagated weights dotted with step-i products reproduce eval_Y / eval_Zbar
// of the step-(i+1) decomposition at t_i, in several dimensions.
TEST(Propagate, MatchesDirectEvaluation) {
  for (auto [m, M, d] : {std::tuple{7, 5, 2}, {4, 4, 1}, {10, 4, 2}, {3, 6, 3}}) {
    const auto g = build_time_grid(1.0, m);
    for (int i = 1; i < m; ++i) {
      const auto rg_i = build_refined_grid(g, M, i), rg_n = build_refined_grid(g, M, i + 1);
      const auto s_i = make_set(3, rg_i.cells(), d), s_n = make_set(3, rg_n.cells(), d);
      const auto next = random_coefficients(s_n, i + 1, 100 + i);
      const auto wY = propagate_weights(next.values(), *s_n, rg_n, *s_i, rg_i);
      const int u = rg_n.locate(g.time(i));
      std::vector<std::vector<double>> wZ;
      for (int gm = 0; gm < d; ++gm) {
        wZ.push_back(propagate_weights(zbar_weights(next, rg_n, g.time(i), u, gm), *s_n,
                                       rg_n, *s_i, rg_i));
      }
      const auto batch = sample_batch(rg_i.points(), d, 4, 9, {StreamRole::step, 1});
      for (std::size_t n = 0; n < 4; ++n) {
        const auto h = eval_basis_products(*s_i, batch, rg_i, n);
        double y = 0.0;
        for (std::size_t r = 0; r < h.size(); ++r) y += wY[r] * h[r];
        const auto pt = make_eval_point(rg_n, batch, n, g.time(i));
        EXPECT_NEAR(y, eval_Y(next, rg_n, pt), 1e-10 * (1 + std::abs(y)));
        const auto zb = eval_Zbar(next, rg_n, pt);
        for (int gm = 0; gm < d; ++gm) {
          double z = 0.0;
          for (std::size_t r = 0; r < h.size(); ++r) z += wZ[gm][r] * h[r];
          EXPECT_NEAR(z, zb[gm], 1e-10 * (1 + std::abs(z)));
        }
      }
    }
  }
}

TEST(EstimateV, Examples) {
  const std::size_t N = 100000;
  {
    const auto set = make_set(2, 3, 1);
    const auto rg = lattice(3);
    const auto batch = sample_batch(rg.points(), 1, 1000, 1, {StreamRole::evaluation, 0});
    EXPECT_EQ(estimate_V(*set, std::vector<double>(1000, 0.0), batch, rg), 0.0);
    EXPECT_EQ(estimate_V(*make_set(0, 3, 1), std::vector<double>(1000, 1.0), batch, rg), 0.0);
  }
  const auto set = make_set(1, 1, 1);
  const auto rg = lattice(1);
  const auto batch = sample_batch(rg.points(), 1, N, 2, {StreamRole::evaluation, 0});
  EXPECT_NEAR(estimate_V(*set, std::vector<double>(N, 1.0), batch, rg), 1.0,
              5.0 / std::sqrt(double(N)) * std::sqrt(2.0));
}

TEST(Coefficients, Parseval) {
  const auto set = make_set(3, 3, 2);
  const auto rg = lattice(3);
  const auto c = random_coefficients(set, 1, 77);
  const std::size_t N = 200000;
  const auto batch = sample_batch(rg.points(), 2, N, 4, {StreamRole::evaluation, 2});
  double s = 0.0, ss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const auto h = eval_basis_products(*set, batch, rg, n);
    double v = 0.0;
    for (std::size_t r = 0; r < h.size(); ++r) v += c[r] * h[r];
    s += v * v;
    ss += v * v * v * v;
  }
  const double mean = s / N;
  const double se = std::sqrt((ss / N - mean * mean) / N);
  EXPECT_NEAR(mean, c.second_moment(), 5.0 * se);
}

TEST(Coefficients, Validation) {
  const auto set = make_set(1, 2, 1);
  EXPECT_THROW(ChaosCoefficients(set, 1, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(ChaosCoefficients(set, 1, {1.0, INFINITY, 0.0}), std::domain_error);
}

TEST(Coefficients, Dumps) {
  const auto set = make_set(1, 2, 1);
  const ChaosCoefficients c(set, 1, {1.0, 0.5, -0.25});
  std::ostringstream csv, js;
  write_coefficients_csv(csv, c);
  EXPECT_EQ(csv.str(), "rank,index,value\n0,0-0,1\n1,0-1,0.5\n2,1-0,-0.25\n");
  write_coefficients_json(js, c);
  const auto j = nlohmann::json::parse(js.str());
  EXPECT_EQ(j["coefficients"].size(), 3u);
  EXPECT_EQ(j["coefficients"][2]["index"], nlohmann::json({1, 0}));
}
