#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "chaosbsde/brownian.hpp"
#include "chaosbsde/grids.hpp"
#include "chaosbsde/multiindex.hpp"

namespace chaosbsde {

/// Coefficients d_a of a truncated chaos decomposition
///   C(F) = sum_a d_a prod_{l,j} H_{a^l_j}(B(h_{j,l}))
/// stored densely by rank in the index set for (P, M(i), d).
class ChaosCoefficients {
 public:
  ChaosCoefficients(std::shared_ptr<const IndexSet> set, int step,
                    std::vector<double> values);

  const IndexSet& index_set() const { return *set_; }
  const std::shared_ptr<const IndexSet>& shared_index_set() const {
    return set_;
  }
  int step() const { return step_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t rank) const { return values_[rank]; }
  /// d_0, the coefficient of the zero index.
  double constant() const { return values_.front(); }
  /// E[C(F)^2] = sum_a d_a^2 / a!.
  double second_moment() const;

 private:
  std::shared_ptr<const IndexSet> set_;
  int step_;
  std::vector<double> values_;
};

/// Debug dump: one row per index (rank, flattened index, value).
void write_coefficients_csv(std::ostream& os, const ChaosCoefficients& c);
void write_coefficients_json(std::ostream& os, const ChaosCoefficients& c);

/// Brownian information needed to evaluate the step-i decomposition at time
/// t in cell r = `cell` (1-based): per coordinate, B at s_1..s_{r-1} and B_t.
/// `brownian` is laid out [coord][k], k = 0..r-1, the last entry being B_t.
struct EvalPoint {
  double t = 0.0;
  int cell = 1;
  int dims = 1;
  std::vector<double> brownian;
};

/// Which cell a lattice point is attributed to.
enum class CellSide {
  left,   // t in (s_{r-1}, s_r]: the cell it closes (the default convention)
  right,  // t in [s_{r-1}, s_r): right limits, used for Z on [t_k, t_{k+1})
};

/// Builds the evaluation point of sample n of `batch` at time t. The batch
/// grid must contain t and every point of `rg` up to t. t = 0 is accepted
/// and maps to cell 1 with a zero-length partial increment.
EvalPoint make_eval_point(const RefinedGrid& rg, const BrownianBatch& batch,
                          std::size_t n, double t,
                          CellSide side = CellSide::left);

/// x^(k/2) for x in [0, 1] (clamped), with 0^0 = 1.
double half_power(double x, int k);

/// Per-position conditional Hermite tables for one evaluation point:
/// tables[p * (P + 1) + k] = E_t[H_k(B(h_p))], i.e. H_k(G_j) on cells before
/// r, ratio^(k/2) H_k(partial increment) on cell r, and [k == 0] after r.
std::vector<double> conditional_tables(const IndexSet& set,
                                       const RefinedGrid& rg,
                                       const EvalPoint& pt);

/// Subset of an index set, closed under the product-recurrence parent, with
/// precomputed table offsets so basis products can be filled in one pass.
class ProductPlan {
 public:
  /// Every index of the set.
  static ProductPlan full(const IndexSet& set);
  /// Indices supported on the first `cells` cells only.
  static ProductPlan support_at_most(const IndexSet& set, int cells);

  std::size_t size() const { return ranks_.size(); }
  std::span<const std::uint32_t> ranks() const { return ranks_; }
  std::uint32_t rank(std::size_t k) const { return ranks_[k]; }

  /// out[k * B + s] = prod over entries of index ranks()[k] of
  /// tables[(p * (P + 1) + deg) * B + s], for a block of B samples.
  void products(std::span<const double> tables, std::size_t block,
                std::span<double> out) const;

  /// Gathers a rank-indexed vector into plan order.
  std::vector<double> gather(std::span<const double> by_rank) const;

 private:
  std::vector<std::uint32_t> ranks_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> table_row_;
};

/// Fills per-position Hermite tables for a block of samples from normalized
/// cell increments laid out increments[(p) * B + s]; output layout matches
/// ProductPlan::products.
void hermite_tables(int max_order, int positions,
                    std::span<const double> increments, std::size_t block,
                    std::span<double> tables);

/// Maps the cells of a refined grid onto a (possibly finer) sampling grid so
/// normalized cell increments can be assembled from batch increments.
class CellMap {
 public:
  CellMap(const RefinedGrid& rg, std::span<const double> sampling_times);

  int cells() const { return static_cast<int>(first_.size()); }
  /// True when every cell is exactly one sampling interval.
  bool identity() const { return identity_; }
  /// Normalized increment of cell j (0-based) for sample n, coordinate l.
  double increment(const BrownianBatch& batch, std::size_t n, int l,
                   int j) const;

 private:
  std::vector<int> first_;
  std::vector<int> last_;
  std::vector<double> weights_;  // sqrt(width_k / delta_j) per interval
  bool identity_ = true;
};

/// H_a(omega_n) for every index of the set, from the cell increments of
/// sample n.
std::vector<double> eval_basis_products(const IndexSet& set,
                                        const BrownianBatch& batch,
                                        const RefinedGrid& rg, std::size_t n);

/// Running sums of F * H_a (and optionally its square) over samples.
/// Partial accumulators merged in a fixed order give thread-independent
/// results.
class CoefficientAccumulator {
 public:
  CoefficientAccumulator(std::size_t size, bool track_squares);

  /// products in ProductPlan::full layout for a block of B samples.
  void add_block(std::span<const double> products, std::span<const double> f,
                 std::size_t block);
  void merge(const CoefficientAccumulator& other);

  std::size_t samples() const { return samples_; }
  std::span<const double> sums() const { return sums_; }
  std::span<const double> square_sums() const { return squares_; }
  bool tracks_squares() const { return track_squares_; }

 private:
  std::vector<double> sums_;
  std::vector<double> squares_;
  std::size_t samples_ = 0;
  bool track_squares_;
};

/// sum_a a! * (unbiased sample variance of F * H_a).
double variance_diagnostic(const IndexSet& set,
                           const CoefficientAccumulator& acc);

/// Same diagnostic computed directly from per-sample values of F on a batch.
double estimate_V(const IndexSet& set, std::span<const double> f,
                  const BrownianBatch& batch, const RefinedGrid& rg);

/// d_a = a! (1/N) sum_n xi^n H_a(omega_n), accumulated in fixed-size chunks.
/// Throws std::domain_error naming the first non-finite sample.
ChaosCoefficients project_terminal(std::span<const double> xi,
                                   const BrownianBatch& batch,
                                   const RefinedGrid& rg,
                                   std::shared_ptr<const IndexSet> set);

/// Y_t = E_t[C(F)] for t in cell r of the step's grid.
double eval_Y(const ChaosCoefficients& c, const RefinedGrid& rg,
              const EvalPoint& pt);

/// Z_t = D_t E_t[C(F)], one entry per Brownian coordinate.
std::vector<double> eval_Z(const ChaosCoefficients& c, const RefinedGrid& rg,
                           const EvalPoint& pt);

/// E_{t_{i-1}}[(1/Delta_i) int_{t_{i-1}}^{t_i} Z_s ds] where t_{i-1} = pt.t
/// and t_i = rg.end().
std::vector<double> eval_Zbar(const ChaosCoefficients& c,
                              const RefinedGrid& rg, const EvalPoint& pt);

/// Rank-indexed weights w with Z^gamma_t = sum_{a'} w[a'] phi_{a'}(t) for t in
/// cell r (1-based), phi being the conditional products at t.
std::vector<double> z_weights(const ChaosCoefficients& c,
                              const RefinedGrid& rg, int cell, int coord);

/// Rank-indexed weights w with Zbar^gamma_{i-1} = sum_{a'} w[a'] phi_{a'}(t_{i-1}),
/// phi taken in cell `cell` (either attribution of a lattice point works).
std::vector<double> zbar_weights(const ChaosCoefficients& c,
                                 const RefinedGrid& rg, double t_prev,
                                 int cell, int coord);

/// Restricts a rank-indexed vector on the step-(i+1) set to the step-i set:
/// out[a] = w[pad(a)] * ratio^(sum_l a^l_{M(i)} / 2), with
/// ratio = (t_i - s^{i+1}_{M(i)-1}) / delta^{i+1}_{M(i)}.
std::vector<double> propagate_weights(std::span<const double> next,
                                      const IndexSet& set_next,
                                      const RefinedGrid& rg_next,
                                      const IndexSet& set_i,
                                      const RefinedGrid& rg_i);

/// Closed-form coefficients of C^{theta(i)}(Y_{t_i}) from the step-(i+1)
/// decomposition.
ChaosCoefficients propagate_Y_coefficients(
    const ChaosCoefficients& next, const RefinedGrid& rg_next,
    const RefinedGrid& rg_i, std::shared_ptr<const IndexSet> set_i);

}  // namespace chaosbsde
