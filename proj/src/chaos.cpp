#include "chaosbsde/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "chaosbsde/hermite.hpp"

namespace chaosbsde {

namespace {

constexpr std::size_t kProjectionChunk = 4096;

double point_tolerance(double horizon) {
  return 64.0 * std::numeric_limits<double>::epsilon() *
         std::max(1.0, std::abs(horizon));
}

std::string flat_label(std::span<const std::uint8_t> deg) {
  std::string s;
  for (std::size_t p = 0; p < deg.size(); ++p) {
    if (p) s += '-';
    s += std::to_string(deg[p]);
  }
  return s;
}

void check_shape(const IndexSet& set, const RefinedGrid& rg) {
  if (set.cells() != rg.cells()) {
    throw std::invalid_argument("index set has " + std::to_string(set.cells()) +
                                " cells but the refined grid has " +
                                std::to_string(rg.cells()));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::vector<double> point_products(const IndexSet& set, const RefinedGrid& rg,
                                   const EvalPoint& pt) {
  const auto tables = conditional_tables(set, rg, pt);
  const auto plan = ProductPlan::full(set);
  std::vector<double> out(plan.size());
  plan.products(tables, 1, out);
  return out;
}

}  // namespace

ChaosCoefficients::ChaosCoefficients(std::shared_ptr<const IndexSet> set,
                                     int step, std::vector<double> values)
    : set_(std::move(set)), step_(step), values_(std::move(values)) {
  if (!set_) throw std::invalid_argument("ChaosCoefficients: null index set");
  if (values_.size() != set_->size()) {
    throw std::invalid_argument("ChaosCoefficients: " +
                                std::to_string(values_.size()) +
                                " values for an index set of size " +
                                std::to_string(set_->size()));
  }
  for (std::size_t r = 0; r < values_.size(); ++r) {
    if (!std::isfinite(values_[r])) {
      throw std::domain_error("ChaosCoefficients: non-finite coefficient at rank " +
                              std::to_string(r) + " (step " +
                              std::to_string(step) + ")");
    }
  }
}

double ChaosCoefficients::second_moment() const {
  double acc = 0.0;
  for (std::size_t r = 0; r < values_.size(); ++r) {
    acc += values_[r] * values_[r] / set_->factorial(r);
  }
  return acc;
}

void write_coefficients_csv(std::ostream& os, const ChaosCoefficients& c) {
  const auto& set = c.index_set();
  os << "rank,index,value\n";
  os.precision(17);
  for (std::size_t r = 0; r < c.size(); ++r) {
    os << r << ',' << flat_label(set.degrees(r)) << ',' << c[r] << '\n';
  }
}

void write_coefficients_json(std::ostream& os, const ChaosCoefficients& c) {
  const auto& set = c.index_set();
  nlohmann::json j;
  j["step"] = c.step();
  j["P"] = set.max_order();
  j["M"] = set.cells();
  j["d"] = set.dims();
  auto& rows = j["coefficients"] = nlohmann::json::array();
  for (std::size_t r = 0; r < c.size(); ++r) {
    const auto deg = set.degrees(r);
    rows.push_back({{"rank", r},
                    {"index", std::vector<int>(deg.begin(), deg.end())},
                    {"value", c[r]}});
  }
  os << j.dump(1) << '\n';
}

EvalPoint make_eval_point(const RefinedGrid& rg, const BrownianBatch& batch,
                          std::size_t n, double t, CellSide side) {
  const double tol = point_tolerance(rg.end());
  if (t < -tol || t > rg.end() + tol) {
    throw std::out_of_range("make_eval_point: t = " + std::to_string(t) +
                            " outside [0, t_i]");
  }
  EvalPoint pt;
  pt.t = t;
  pt.dims = batch.dims();
  if (t <= tol) {
    pt.t = 0.0;
    pt.cell = 1;
  } else if (side == CellSide::right && t < rg.end() - tol) {
    const auto pts = rg.points();
    const auto it = std::upper_bound(pts.begin(), pts.end(), t + tol);
    pt.cell = static_cast<int>(it - pts.begin());
    // Snap onto the lattice point this cell opens.
    if (std::abs(t - rg.point(pt.cell - 1)) <= tol) pt.t = rg.point(pt.cell - 1);
  } else {
    pt.cell = rg.locate(std::min(t, rg.end()));
    if (std::abs(t - rg.point(pt.cell)) <= tol) pt.t = rg.point(pt.cell);
  }
  const auto r = static_cast<std::size_t>(pt.cell);
  pt.brownian.assign(static_cast<std::size_t>(pt.dims) * r, 0.0);
  for (int l = 0; l < pt.dims; ++l) {
    for (std::size_t k = 0; k + 1 < r; ++k) {
      pt.brownian[static_cast<std::size_t>(l) * r + k] =
          batch.value_at(n, l, rg.point(static_cast<int>(k) + 1));
    }
    pt.brownian[static_cast<std::size_t>(l) * r + r - 1] =
        pt.t == 0.0 ? 0.0 : batch.value_at(n, l, pt.t);
  }
  return pt;
}

double half_power(double x, int k) {
  if (k == 0) return 1.0;
  x = std::clamp(x, 0.0, 1.0);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return std::exp(0.5 * static_cast<double>(k) * std::log(x));
}

std::vector<double> conditional_tables(const IndexSet& set,
                                       const RefinedGrid& rg,
                                       const EvalPoint& pt) {
  check_shape(set, rg);
  if (pt.dims != set.dims()) {
    throw std::invalid_argument("conditional_tables: dimension mismatch");
  }
  const int P = set.max_order();
  const auto row = static_cast<std::size_t>(P + 1);
  const int M = set.cells();
  const int r = pt.cell;
  if (r < 1 || r > M) throw std::out_of_range("conditional_tables: cell");
  std::vector<double> tables(static_cast<std::size_t>(set.width()) * row, 0.0);
  const auto rr = static_cast<std::size_t>(r);
  const double s_prev = rg.point(r - 1);
  const double span = pt.t - s_prev;
  const double ratio = span > 0.0 ? span / rg.width(r) : 0.0;
  std::vector<double> h(row);
  for (int l = 0; l < set.dims(); ++l) {
    const double* b = pt.brownian.data() + static_cast<std::size_t>(l) * rr;
    for (int j = 0; j < M; ++j) {
      double* out = tables.data() + static_cast<std::size_t>(l * M + j) * row;
      if (j + 1 < r) {
        const double prev = j == 0 ? 0.0 : b[j - 1];
        hermite_all(P, (b[j] - prev) / std::sqrt(rg.width(j + 1)),
                    std::span<double>(out, row));
      } else if (j + 1 == r) {
        const double prev = r >= 2 ? b[rr - 2] : 0.0;
        const double inc = span > 0.0 ? (b[rr - 1] - prev) / std::sqrt(span) : 0.0;
        hermite_all(P, inc, h);
        for (int k = 0; k <= P; ++k) {
          out[k] = half_power(ratio, k) * h[static_cast<std::size_t>(k)];
        }
      } else {
        out[0] = 1.0;
      }
    }
  }
  return tables;
}

ProductPlan ProductPlan::full(const IndexSet& set) {
  ProductPlan plan;
  const std::size_t n = set.size();
  const auto row = static_cast<std::uint32_t>(set.max_order() + 1);
  plan.ranks_.resize(n);
  plan.parent_.resize(n);
  plan.table_row_.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    plan.ranks_[r] = static_cast<std::uint32_t>(r);
    plan.parent_[r] = set.parent(r);
    plan.table_row_[r] = set.last_position(r) * row + set.last_degree(r);
  }
  return plan;
}

ProductPlan ProductPlan::support_at_most(const IndexSet& set, int cells) {
  ProductPlan plan;
  const auto row = static_cast<std::uint32_t>(set.max_order() + 1);
  std::vector<std::uint32_t> local(set.size(),
                                   std::numeric_limits<std::uint32_t>::max());
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (set.support(r) > cells) continue;
    local[r] = static_cast<std::uint32_t>(plan.ranks_.size());
    plan.ranks_.push_back(static_cast<std::uint32_t>(r));
    plan.parent_.push_back(r == 0 ? 0 : local[set.parent(r)]);
    plan.table_row_.push_back(set.last_position(r) * row + set.last_degree(r));
  }
  return plan;
}

void ProductPlan::products(std::span<const double> tables, std::size_t block,
                           std::span<double> out) const {
  const std::size_t n = ranks_.size();
  if (out.size() < n * block) {
    throw std::invalid_argument("ProductPlan::products: output too small");
  }
  double* o = out.data();
  const double* t = tables.data();
  for (std::size_t s = 0; s < block; ++s) o[s] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double* parent = o + static_cast<std::size_t>(parent_[k]) * block;
    const double* factor = t + static_cast<std::size_t>(table_row_[k]) * block;
    double* dst = o + k * block;
    for (std::size_t s = 0; s < block; ++s) dst[s] = parent[s] * factor[s];
  }
}

std::vector<double> ProductPlan::gather(std::span<const double> by_rank) const {
  std::vector<double> out(ranks_.size());
  for (std::size_t k = 0; k < ranks_.size(); ++k) out[k] = by_rank[ranks_[k]];
  return out;
}

void hermite_tables(int max_order, int positions,
                    std::span<const double> increments, std::size_t block,
                    std::span<double> tables) {
  const auto row = static_cast<std::size_t>(max_order + 1);
  for (std::size_t p = 0; p < static_cast<std::size_t>(positions); ++p) {
    const double* x = increments.data() + p * block;
    double* h = tables.data() + p * row * block;
    for (std::size_t s = 0; s < block; ++s) h[s] = 1.0;
    if (max_order == 0) continue;
    for (std::size_t s = 0; s < block; ++s) h[block + s] = x[s];
    for (std::size_t k = 1; k + 1 < row; ++k) {
      const double inv = 1.0 / static_cast<double>(k + 1);
      double* next = h + (k + 1) * block;
      const double* cur = h + k * block;
      const double* prev = h + (k - 1) * block;
      for (std::size_t s = 0; s < block; ++s) {
        next[s] = (x[s] * cur[s] - prev[s]) * inv;
      }
    }
  }
}

CellMap::CellMap(const RefinedGrid& rg, std::span<const double> sampling) {
  const double tol = point_tolerance(rg.end());
  auto find = [&](double s) {
    const auto it = std::lower_bound(sampling.begin(), sampling.end(), s - tol);
    if (it == sampling.end() || std::abs(*it - s) > tol) {
      throw std::invalid_argument("CellMap: grid point " + std::to_string(s) +
                                  " missing from the sampling grid");
    }
    return static_cast<int>(it - sampling.begin());
  };
  for (int j = 1; j <= rg.cells(); ++j) {
    const int a = find(rg.point(j - 1));
    const int b = find(rg.point(j));
    first_.push_back(a);
    last_.push_back(b);
    if (b - a != 1) identity_ = false;
    for (int k = a; k < b; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      weights_.push_back(std::sqrt((sampling[kk + 1] - sampling[kk]) / rg.width(j)));
    }
  }
  if (first_.front() != 0) identity_ = false;
}

double CellMap::increment(const BrownianBatch& batch, std::size_t n, int l,
                          int j) const {
  const auto g = batch.increments(n, l);
  const auto jj = static_cast<std::size_t>(j);
  if (identity_) return g[jj];
  // Offset of cell j's weights: sum of interval counts of earlier cells.
  std::size_t w = 0;
  for (std::size_t q = 0; q < jj; ++q) {
    w += static_cast<std::size_t>(last_[q] - first_[q]);
  }
  double acc = 0.0;
  for (int k = first_[jj]; k < last_[jj]; ++k, ++w) {
    acc += weights_[w] * g[static_cast<std::size_t>(k)];
  }
  return acc;
}

std::vector<double> eval_basis_products(const IndexSet& set,
                                        const BrownianBatch& batch,
                                        const RefinedGrid& rg, std::size_t n) {
  check_shape(set, rg);
  const CellMap map(rg, batch.times());
  std::vector<double> inc(static_cast<std::size_t>(set.width()));
  for (int l = 0; l < set.dims(); ++l) {
    for (int j = 0; j < set.cells(); ++j) {
      inc[static_cast<std::size_t>(l * set.cells() + j)] =
          map.increment(batch, n, l, j);
    }
  }
  std::vector<double> tables(inc.size() *
                             static_cast<std::size_t>(set.max_order() + 1));
  hermite_tables(set.max_order(), set.width(), inc, 1, tables);
  const auto plan = ProductPlan::full(set);
  std::vector<double> out(plan.size());
  plan.products(tables, 1, out);
  return out;
}

CoefficientAccumulator::CoefficientAccumulator(std::size_t size,
                                               bool track_squares)
    : sums_(size, 0.0),
      squares_(track_squares ? size : 0, 0.0),
      track_squares_(track_squares) {}

void CoefficientAccumulator::add_block(std::span<const double> products,
                                       std::span<const double> f,
                                       std::size_t block) {
  const std::size_t n = sums_.size();
  const double* fv = f.data();
  for (std::size_t k = 0; k < n; ++k) {
    const double* p = products.data() + k * block;
    double acc = 0.0;
    for (std::size_t s = 0; s < block; ++s) acc += fv[s] * p[s];
    sums_[k] += acc;
  }
  if (track_squares_) {
    for (std::size_t k = 0; k < n; ++k) {
      const double* p = products.data() + k * block;
      double acc = 0.0;
      for (std::size_t s = 0; s < block; ++s) {
        const double x = fv[s] * p[s];
        acc += x * x;
      }
      squares_[k] += acc;
    }
  }
  samples_ += block;
}

void CoefficientAccumulator::merge(const CoefficientAccumulator& other) {
  if (other.sums_.size() != sums_.size() ||
      other.track_squares_ != track_squares_) {
    throw std::invalid_argument("CoefficientAccumulator::merge: shape mismatch");
  }
  for (std::size_t k = 0; k < sums_.size(); ++k) sums_[k] += other.sums_[k];
  for (std::size_t k = 0; k < squares_.size(); ++k) {
    squares_[k] += other.squares_[k];
  }
  samples_ += other.samples_;
}

double variance_diagnostic(const IndexSet& set,
                           const CoefficientAccumulator& acc) {
  if (!acc.tracks_squares()) {
    throw std::logic_error("variance_diagnostic: squares were not tracked");
  }
  const auto n = static_cast<double>(acc.samples());
  if (acc.samples() < 2) {
    throw std::invalid_argument("variance_diagnostic: need at least 2 samples");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < set.size(); ++r) {
    const double s = acc.sums()[r];
    const double var = std::max(0.0, (acc.square_sums()[r] - s * s / n) / (n - 1.0));
    total += set.factorial(r) * var;
  }
  return total;
}

namespace {

// Fills a CoefficientAccumulator over samples [begin, end) of the batch.
void accumulate_range(const IndexSet& set, const ProductPlan& plan,
                      const CellMap& map, const BrownianBatch& batch,
                      std::span<const double> f, std::size_t begin,
                      std::size_t end, CoefficientAccumulator& acc) {
  constexpr std::size_t kBlock = 16;
  const auto width = static_cast<std::size_t>(set.width());
  const auto row = static_cast<std::size_t>(set.max_order() + 1);
  std::vector<double> inc(width * kBlock);
  std::vector<double> tables(width * row * kBlock);
  std::vector<double> prod(plan.size() * kBlock);
  for (std::size_t n0 = begin; n0 < end; n0 += kBlock) {
    const std::size_t b = std::min(kBlock, end - n0);
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
    acc.add_block(prod, f.subspan(n0, b), b);
  }
}

}  // namespace

double estimate_V(const IndexSet& set, std::span<const double> f,
                  const BrownianBatch& batch, const RefinedGrid& rg) {
  check_shape(set, rg);
  if (f.size() != batch.size()) {
    throw std::invalid_argument("estimate_V: sample count mismatch");
  }
  const auto plan = ProductPlan::full(set);
  const CellMap map(rg, batch.times());
  CoefficientAccumulator acc(set.size(), true);
  accumulate_range(set, plan, map, batch, f, 0, f.size(), acc);
  return variance_diagnostic(set, acc);
}

ChaosCoefficients project_terminal(std::span<const double> xi,
                                   const BrownianBatch& batch,
                                   const RefinedGrid& rg,
                                   std::shared_ptr<const IndexSet> set) {
  check_shape(*set, rg);
  if (xi.size() != batch.size()) {
    throw std::invalid_argument("project_terminal: " + std::to_string(xi.size()) +
                                " samples for a batch of " +
                                std::to_string(batch.size()));
  }
  for (std::size_t n = 0; n < xi.size(); ++n) {
    if (!std::isfinite(xi[n])) {
      throw std::domain_error("project_terminal: non-finite terminal sample " +
                              std::to_string(batch.first_sample() + n));
    }
  }
  const auto plan = ProductPlan::full(*set);
  const CellMap map(rg, batch.times());
  CoefficientAccumulator total(set->size(), false);
  for (std::size_t c0 = 0; c0 < xi.size(); c0 += kProjectionChunk) {
    CoefficientAccumulator part(set->size(), false);
    accumulate_range(*set, plan, map, batch, xi, c0,
                     std::min(xi.size(), c0 + kProjectionChunk), part);
    total.merge(part);
  }
  std::vector<double> values(set->size());
  const auto n = static_cast<double>(xi.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    values[r] = set->factorial(r) * total.sums()[r] / n;
  }
  return ChaosCoefficients(std::move(set), rg.step(), std::move(values));
}

double eval_Y(const ChaosCoefficients& c, const RefinedGrid& rg,
              const EvalPoint& pt) {
  return dot(c.values(), point_products(c.index_set(), rg, pt));
}

std::vector<double> z_weights(const ChaosCoefficients& c,
                              const RefinedGrid& rg, int cell, int coord) {
  const auto& set = c.index_set();
  check_shape(set, rg);
  const int pos = coord * set.cells() + (cell - 1);
  const double scale = 1.0 / std::sqrt(rg.width(cell));
  std::vector<double> w(set.size(), 0.0);
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (const auto up = set.raised(r, pos)) w[r] = scale * c[*up];
  }
  return w;
}

std::vector<double> eval_Z(const ChaosCoefficients& c, const RefinedGrid& rg,
                           const EvalPoint& pt) {
  const auto phi = point_products(c.index_set(), rg, pt);
  std::vector<double> z(static_cast<std::size_t>(pt.dims));
  for (int g = 0; g < pt.dims; ++g) {
    z[static_cast<std::size_t>(g)] = dot(z_weights(c, rg, pt.cell, g), phi);
  }
  return z;
}

std::vector<double> zbar_weights(const ChaosCoefficients& c,
                                 const RefinedGrid& rg, double t_prev,
                                 int cell, int coord) {
  const auto& set = c.index_set();
  check_shape(set, rg);
  const int u = cell;
  const double delta = rg.end() - t_prev;
  if (!(delta > 0.0)) throw std::invalid_argument("zbar_weights: t_{i-1} >= t_i");
  const double c1 = (rg.point(u) - t_prev) / std::sqrt(rg.width(u));
  std::vector<double> w(set.size(), 0.0);
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (set.order(r) + 1 > set.max_order()) continue;
    double acc = 0.0;
    if (c1 != 0.0) {
      acc += c1 * c[*set.raised(r, coord * set.cells() + (u - 1))];
    }
    for (int q = u + 1; q <= set.cells(); ++q) {
      acc += std::sqrt(rg.width(q)) * c[*set.raised(r, coord * set.cells() + (q - 1))];
    }
    w[r] = acc / delta;
  }
  return w;
}

std::vector<double> eval_Zbar(const ChaosCoefficients& c,
                              const RefinedGrid& rg, const EvalPoint& pt) {
  const auto phi = point_products(c.index_set(), rg, pt);
  std::vector<double> z(static_cast<std::size_t>(pt.dims));
  for (int g = 0; g < pt.dims; ++g) {
    z[static_cast<std::size_t>(g)] =
        dot(zbar_weights(c, rg, pt.t, pt.cell, g), phi);
  }
  return z;
}

std::vector<double> propagate_weights(std::span<const double> next,
                                      const IndexSet& set_next,
                                      const RefinedGrid& rg_next,
                                      const IndexSet& set_i,
                                      const RefinedGrid& rg_i) {
  check_shape(set_next, rg_next);
  check_shape(set_i, rg_i);
  if (next.size() != set_next.size()) {
    throw std::invalid_argument("propagate_weights: size mismatch");
  }
  if (set_i.dims() != set_next.dims() ||
      set_i.max_order() != set_next.max_order()) {
    throw std::invalid_argument("propagate_weights: (P, d) mismatch");
  }
  const int mi = rg_i.cells();
  const int mn = rg_next.cells();
  if (mi > mn) throw std::invalid_argument("propagate_weights: M(i) > M(i+1)");
  const double tol = point_tolerance(rg_next.end());
  if (std::abs(rg_next.point(mi - 1) - rg_i.point(mi - 1)) > tol ||
      rg_i.end() > rg_next.point(mi) + tol) {
    throw std::invalid_argument("propagate_weights: grids are not nested");
  }
  const double ratio =
      (rg_i.end() - rg_next.point(mi - 1)) / rg_next.width(mi);
  const int dims = set_i.dims();
  std::vector<int> padded(static_cast<std::size_t>(set_next.width()), 0);
  std::vector<double> out(set_i.size());
  for (std::size_t r = 0; r < set_i.size(); ++r) {
    const auto deg = set_i.degrees(r);
    int last_cell = 0;
    for (int l = 0; l < dims; ++l) {
      for (int j = 0; j < mn; ++j) {
        padded[static_cast<std::size_t>(l * mn + j)] =
            j < mi ? deg[static_cast<std::size_t>(l * mi + j)] : 0;
      }
      last_cell += deg[static_cast<std::size_t>(l * mi + mi - 1)];
    }
    const auto rank = set_next.find(padded);
    out[r] = next[*rank] * half_power(ratio, last_cell);
  }
  return out;
}

ChaosCoefficients propagate_Y_coefficients(
    const ChaosCoefficients& next, const RefinedGrid& rg_next,
    const RefinedGrid& rg_i, std::shared_ptr<const IndexSet> set_i) {
  auto values = propagate_weights(next.values(), next.index_set(), rg_next,
                                  *set_i, rg_i);
  return ChaosCoefficients(std::move(set_i), rg_i.step(), std::move(values));
}

}  // namespace chaosbsde
