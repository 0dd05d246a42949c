#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chaosbsde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Inverse standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9 on (0, 1)).
double normal_quantile(double u);

/// Which Brownian family a stream belongs to.
enum class StreamRole : std::uint32_t {
  terminal = 1,    // B^{xi,n}: terminal-condition projection
  step = 2,        // B^{i,n}: coefficient estimation at step i
  evaluation = 3,  // fresh paths for trajectories and property checks
  picard = 4,      // per-iteration paths of the Picard scheme
  oracle = 5,      // independent baselines
};

struct StreamLabel {
  StreamRole role = StreamRole::evaluation;
  std::uint32_t index = 0;  // step i, iteration q, or free tag
};

/// Standard normal variates for (seed, label, sample n, coordinate l, cell
/// pair p): two draws per Philox call, for cells 2p and 2p+1. Independent of
/// evaluation order by construction.
std::array<double, 2> normal_pair(std::uint64_t seed, StreamLabel label,
                                  std::uint64_t sample, std::uint32_t coord,
                                  std::uint32_t pair);

/// Standardized Brownian increments G[n][l][k] = (B_{s_k} - B_{s_{k-1}}) /
/// sqrt(s_k - s_{k-1}) on a sampling grid 0 = s_0 < ... < s_K, for samples
/// [first, first + count) of a family.
class BrownianBatch {
 public:
  BrownianBatch(std::vector<double> times, int dims, std::size_t first,
                std::size_t count);
  BrownianBatch(const BrownianBatch&);
  BrownianBatch(BrownianBatch&&) noexcept;
  BrownianBatch& operator=(const BrownianBatch&);
  BrownianBatch& operator=(BrownianBatch&&) noexcept;
  ~BrownianBatch();

  std::span<const double> times() const { return times_; }
  int dims() const { return dims_; }
  int intervals() const { return static_cast<int>(times_.size()) - 1; }
  std::size_t size() const { return count_; }
  std::size_t first_sample() const { return first_; }

  /// Standardized increment over interval k (0-based).
  double increment(std::size_t n, int l, int k) const {
    return data_[(n * static_cast<std::size_t>(dims_) +
                  static_cast<std::size_t>(l)) *
                     static_cast<std::size_t>(intervals()) +
                 static_cast<std::size_t>(k)];
  }
  double& increment(std::size_t n, int l, int k) {
    return data_[(n * static_cast<std::size_t>(dims_) +
                  static_cast<std::size_t>(l)) *
                     static_cast<std::size_t>(intervals()) +
                 static_cast<std::size_t>(k)];
  }
  /// Increments of sample n, coordinate l, across all intervals.
  std::span<const double> increments(std::size_t n, int l) const;

  /// Index of a grid point; throws std::out_of_range if t is not on the grid.
  int point_index(double t) const;

  /// B^l at grid point `point` for local sample n (prefix sum of increments).
  double value(std::size_t n, int l, int point) const;
  /// B^l_t for a grid time t; throws if t is not a grid point.
  double value_at(std::size_t n, int l, double t) const;

  /// B values of sample n at every grid point, laid out [point][coord].
  void path(std::size_t n, std::span<double> out) const;

 private:
  std::vector<double> times_;
  std::vector<double> sqrt_widths_;
  int dims_;
  std::size_t first_;
  std::size_t count_;
  std::vector<double> data_;
};

/// Deterministic batch for samples [first, first + count) of the family
/// (seed, label) on the given sampling grid.
BrownianBatch sample_batch(std::span<const double> times, int dims,
                           std::size_t count, std::uint64_t seed,
                           StreamLabel label, std::size_t first = 0);

/// B^l_t(omega_n) for a grid time t.
inline double brownian_value(const BrownianBatch& batch, std::size_t n, int l,
                             double t) {
  return batch.value_at(n, l, t);
}

/// Live and peak number of increment values held by BrownianBatch objects
/// in this process (instrumentation for the memory contract).
struct BatchMemoryStats {
  std::size_t live = 0;
  std::size_t peak = 0;
};
BatchMemoryStats batch_memory_stats();
void reset_batch_memory_peak();

}  // namespace chaosbsde
