#include "chaosbsde/brownian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace chaosbsde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void track_alloc(std::size_t n) {
  const std::size_t now = g_live.fetch_add(n) + n;
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void track_free(std::size_t n) { g_live.fetch_sub(n); }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  philox_round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
    philox_round(counter, key);
  }
  return counter;
}

namespace {

double acklam(double u) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (u > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("normal_quantile: u outside (0, 1)");
  }
  // one Halley step against erfc
  const double x = acklam(u);
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double h = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - h / (1.0 + 0.5 * x * h);
}

std::array<double, 2> normal_pair(std::uint64_t seed, StreamLabel label,
                                  std::uint64_t sample, std::uint32_t coord,
                                  std::uint32_t pair) {
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(label.role) << 32) | label.index;
  const std::uint64_t k = splitmix64(seed ^ splitmix64(tag));
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(k),
                                            static_cast<std::uint32_t>(k >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      pair, coord, static_cast<std::uint32_t>(sample),
      static_cast<std::uint32_t>(sample >> 32)};
  const auto x = philox4x32(ctr, key);
  return {normal_quantile(to_open_uniform(x[0], x[1])),
          normal_quantile(to_open_uniform(x[2], x[3]))};
}

BrownianBatch::BrownianBatch(std::vector<double> times, int dims,
                             std::size_t first, std::size_t count)
    : times_(std::move(times)), dims_(dims), first_(first), count_(count) {
  if (times_.size() < 2 || times_.front() != 0.0) {
    throw std::invalid_argument("BrownianBatch: grid must start at 0");
  }
  if (dims < 1) throw std::invalid_argument("BrownianBatch: dims < 1");
  sqrt_widths_.resize(times_.size() - 1);
  for (std::size_t k = 1; k < times_.size(); ++k) {
    const double w = times_[k] - times_[k - 1];
    if (!(w > 0.0)) {
      throw std::invalid_argument("BrownianBatch: grid not increasing");
    }
    sqrt_widths_[k - 1] = std::sqrt(w);
  }
  data_.assign(count_ * static_cast<std::size_t>(dims_) * sqrt_widths_.size(),
               0.0);
  track_alloc(data_.size());
}

BrownianBatch::BrownianBatch(const BrownianBatch& o)
    : times_(o.times_),
      sqrt_widths_(o.sqrt_widths_),
      dims_(o.dims_),
      first_(o.first_),
      count_(o.count_),
      data_(o.data_) {
  track_alloc(data_.size());
}

BrownianBatch::BrownianBatch(BrownianBatch&& o) noexcept
    : times_(std::move(o.times_)),
      sqrt_widths_(std::move(o.sqrt_widths_)),
      dims_(o.dims_),
      first_(o.first_),
      count_(o.count_),
      data_(std::move(o.data_)) {
  o.data_.clear();
  o.count_ = 0;
}

BrownianBatch& BrownianBatch::operator=(const BrownianBatch& o) {
  if (this != &o) {
    BrownianBatch tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

BrownianBatch& BrownianBatch::operator=(BrownianBatch&& o) noexcept {
  if (this != &o) {
    track_free(data_.size());
    times_ = std::move(o.times_);
    sqrt_widths_ = std::move(o.sqrt_widths_);
    dims_ = o.dims_;
    first_ = o.first_;
    count_ = o.count_;
    data_ = std::move(o.data_);
    o.data_.clear();
    o.count_ = 0;
  }
  return *this;
}

BrownianBatch::~BrownianBatch() { track_free(data_.size()); }

std::span<const double> BrownianBatch::increments(std::size_t n, int l) const {
  const auto k = static_cast<std::size_t>(intervals());
  return {data_.data() +
              (n * static_cast<std::size_t>(dims_) + static_cast<std::size_t>(l)) * k,
          k};
}

int BrownianBatch::point_index(double t) const {
  const double tol = 64.0 * 2.220446049250313e-16 * std::max(1.0, times_.back());
  const auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it == times_.end() || std::abs(*it - t) > tol) {
    throw std::out_of_range("BrownianBatch: t = " + std::to_string(t) +
                            " is not a grid point");
  }
  return static_cast<int>(it - times_.begin());
}

double BrownianBatch::value(std::size_t n, int l, int point) const {
  if (point < 0 || point > intervals()) {
    throw std::out_of_range("BrownianBatch::value: point index");
  }
  const auto g = increments(n, l);
  double b = 0.0;
  for (int k = 0; k < point; ++k) {
    b += sqrt_widths_[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
  }
  return b;
}

double BrownianBatch::value_at(std::size_t n, int l, double t) const {
  return value(n, l, point_index(t));
}

void BrownianBatch::path(std::size_t n, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dims_);
  const auto k = static_cast<std::size_t>(intervals());
  if (out.size() < (k + 1) * d) {
    throw std::invalid_argument("BrownianBatch::path: output too small");
  }
  for (std::size_t l = 0; l < d; ++l) {
    const auto g = increments(n, static_cast<int>(l));
    double b = 0.0;
    out[l] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      b += sqrt_widths_[p] * g[p];
      out[(p + 1) * d + l] = b;
    }
  }
}

BrownianBatch sample_batch(std::span<const double> times, int dims,
                           std::size_t count, std::uint64_t seed,
                           StreamLabel label, std::size_t first) {
  if (count < 1) throw std::invalid_argument("sample_batch: N < 1");
  BrownianBatch batch(std::vector<double>(times.begin(), times.end()), dims,
                      first, count);
  const int k_total = batch.intervals();
  for (std::size_t n = 0; n < count; ++n) {
    for (int l = 0; l < dims; ++l) {
      for (int k = 0; k < k_total; k += 2) {
        const auto z = normal_pair(seed, label, first + n,
                                   static_cast<std::uint32_t>(l),
                                   static_cast<std::uint32_t>(k / 2));
        batch.increment(n, l, k) = z[0];
        if (k + 1 < k_total) batch.increment(n, l, k + 1) = z[1];
      }
    }
  }
  return batch;
}

BatchMemoryStats batch_memory_stats() { return {g_live.load(), g_peak.load()}; }

void reset_batch_memory_peak() { g_peak.store(g_live.load()); }

}  // namespace chaosbsde
