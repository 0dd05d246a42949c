#include "chaosbsde/multiindex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace chaosbsde {

namespace {

// C(n, k) with k small; saturates at UINT64_MAX.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

MultiIndex::MultiIndex(int dims, int cells)
    : MultiIndex(dims, cells,
                 std::vector<int>(static_cast<std::size_t>(
                                      std::max(dims, 0) * std::max(cells, 0)),
                                  0)) {}

MultiIndex::MultiIndex(int dims, int cells, std::vector<int> flat)
    : dims_(dims), cells_(cells), degrees_(std::move(flat)) {
  if (dims < 1 || cells < 1) {
    throw std::invalid_argument("MultiIndex needs dims >= 1 and cells >= 1");
  }
  if (degrees_.size() != static_cast<std::size_t>(dims * cells)) {
    throw std::invalid_argument("MultiIndex: flat size " +
                                std::to_string(degrees_.size()) +
                                " != dims * cells");
  }
  for (int v : degrees_) {
    if (v < 0) throw std::invalid_argument("MultiIndex: negative degree");
  }
}

void MultiIndex::set(int coord, int cell, int degree) {
  if (coord < 0 || coord >= dims_ || cell < 0 || cell >= cells_) {
    throw std::out_of_range("MultiIndex::set: position out of range");
  }
  if (degree < 0) throw std::invalid_argument("MultiIndex: negative degree");
  degrees_[static_cast<std::size_t>(coord * cells_ + cell)] = degree;
}

int MultiIndex::order() const {
  return std::accumulate(degrees_.begin(), degrees_.end(), 0);
}

double MultiIndex::log_factorial() const {
  double acc = 0.0;
  for (int v : degrees_) acc += std::lgamma(static_cast<double>(v) + 1.0);
  return acc;
}

double MultiIndex::factorial() const {
  double acc = 1.0;
  for (int v : degrees_) {
    for (int k = 2; k <= v; ++k) acc *= k;
  }
  return acc;
}

MultiIndex pad_index(const MultiIndex& a, int cells_new) {
  if (cells_new < a.cells()) {
    throw std::invalid_argument("pad_index: target cells " +
                                std::to_string(cells_new) + " < " +
                                std::to_string(a.cells()));
  }
  MultiIndex out(a.dims(), cells_new);
  for (int l = 0; l < a.dims(); ++l) {
    for (int j = 0; j < a.cells(); ++j) out.set(l, j, a(l, j));
  }
  return out;
}

MultiIndex truncate_prefix(const MultiIndex& a, int r) {
  if (r < 1 || r > a.cells()) {
    throw std::out_of_range("truncate_prefix: r = " + std::to_string(r) +
                            " outside [1, " + std::to_string(a.cells()) + "]");
  }
  MultiIndex out = a;
  for (int l = 0; l < a.dims(); ++l) {
    for (int j = r; j < a.cells(); ++j) out.set(l, j, 0);
  }
  return out;
}

std::uint64_t index_count(int order, std::uint64_t width) {
  if (order < 0) throw std::invalid_argument("index_count: negative order");
  const std::uint64_t c =
      binomial_saturating(width + static_cast<std::uint64_t>(order),
                          static_cast<std::uint64_t>(order));
  if (c == std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("index_count: count overflows 64 bits");
  }
  return c;
}

IndexSet::IndexSet(int max_order, int cells, int dims, std::uint64_t cap)
    : max_order_(max_order), cells_(cells), dims_(dims), width_(0), size_(0) {
  if (max_order < 0 || max_order > 16) {
    throw std::invalid_argument("IndexSet: order P = " +
                                std::to_string(max_order) +
                                " outside [0, 16]");
  }
  if (cells < 1 || dims < 1) {
    throw std::invalid_argument("IndexSet: need M >= 1 and d >= 1");
  }
  const std::uint64_t width64 =
      static_cast<std::uint64_t>(cells) * static_cast<std::uint64_t>(dims);
  if (width64 > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("IndexSet: d * M too large");
  }
  width_ = static_cast<int>(width64);
  const std::uint64_t count = index_count(max_order, width64);
  if (count > cap) {
    throw std::length_error(
        "IndexSet: C(P + dM, dM) = " + std::to_string(count) +
        " indices exceeds the cap of " + std::to_string(cap) + " (P=" +
        std::to_string(max_order) + ", M=" + std::to_string(cells) +
        ", d=" + std::to_string(dims) + ")");
  }
  size_ = static_cast<std::size_t>(count);

  below_order_.resize(static_cast<std::size_t>(max_order) + 2, 0);
  for (int k = 0; k <= max_order + 1; ++k) {
    below_order_[static_cast<std::size_t>(k)] =
        k == 0 ? 0 : index_count(k - 1, width64);
  }

  const auto w = static_cast<std::size_t>(width_);
  degrees_.assign(size_ * w, 0);
  orders_.resize(size_);
  factorials_.resize(size_);
  parents_.resize(size_);
  last_positions_.resize(size_);
  last_degrees_.resize(size_);
  supports_.resize(size_);

  std::vector<int> cur(w, 0);
  std::size_t rank = 0;
  for (int k = 0; k <= max_order; ++k) {
    // Compositions of k into w parts, lexicographically ascending.
    std::fill(cur.begin(), cur.end(), 0);
    cur[w - 1] = k;
    while (true) {
      std::copy(cur.begin(), cur.end(),
                degrees_.begin() + static_cast<std::ptrdiff_t>(rank * w));
      ++rank;
      // Successor: rightmost p < w-1 with a nonzero tail.
      int tail = cur[w - 1];
      std::size_t p = w - 1;
      bool found = false;
      while (p > 0) {
        --p;
        if (tail > 0) {
          found = true;
          break;
        }
        tail += cur[p];
      }
      if (!found) break;
      cur[p] += 1;
      for (std::size_t q = p + 1; q < w; ++q) cur[q] = 0;
      cur[w - 1] = tail - 1;
    }
  }
  if (rank != size_) {
    throw std::logic_error("IndexSet: enumeration count mismatch");
  }

  std::vector<int> flat(w);
  for (std::size_t r = 0; r < size_; ++r) {
    const auto deg = degrees(r);
    int order = 0;
    double fact = 1.0;
    int last = -1;
    int support = 0;
    for (std::size_t p = 0; p < w; ++p) {
      order += deg[p];
      for (int v = 2; v <= deg[p]; ++v) fact *= v;
      if (deg[p] > 0) {
        last = static_cast<int>(p);
        support = std::max(support, static_cast<int>(p % cells_) + 1);
      }
    }
    orders_[r] = static_cast<std::uint8_t>(order);
    factorials_[r] = fact;
    supports_[r] = static_cast<std::uint16_t>(support);
    if (last < 0) {
      parents_[r] = 0;
      last_positions_[r] = 0;
      last_degrees_[r] = 0;
      continue;
    }
    std::copy(deg.begin(), deg.end(), flat.begin());
    const int d_last = flat[static_cast<std::size_t>(last)];
    flat[static_cast<std::size_t>(last)] = 0;
    parents_[r] = static_cast<std::uint32_t>(rank_of(flat, order - d_last));
    last_positions_[r] = static_cast<std::uint16_t>(last);
    last_degrees_[r] = static_cast<std::uint8_t>(d_last);
  }
}

std::uint64_t IndexSet::compositions(int total, std::uint64_t parts) const {
  if (parts == 0) return total == 0 ? 1 : 0;
  return binomial_saturating(static_cast<std::uint64_t>(total) + parts - 1,
                             static_cast<std::uint64_t>(total));
}

std::uint64_t IndexSet::rank_of(std::span<const int> flat, int order) const {
  std::uint64_t r = below_order_[static_cast<std::size_t>(order)];
  int rem = order;
  const auto w = static_cast<std::uint64_t>(width_);
  for (std::uint64_t p = 0; p + 1 < w && rem > 0; ++p) {
    const int a = flat[p];
    for (int v = 0; v < a; ++v) r += compositions(rem - v, w - p - 1);
    rem -= a;
  }
  return r;
}

MultiIndex IndexSet::at(std::size_t rank) const {
  if (rank >= size_) throw std::out_of_range("IndexSet::at: rank out of range");
  const auto deg = degrees(rank);
  return MultiIndex(dims_, cells_, std::vector<int>(deg.begin(), deg.end()));
}

std::optional<std::size_t> IndexSet::find(std::span<const int> flat) const {
  if (flat.size() != static_cast<std::size_t>(width_)) return std::nullopt;
  int order = 0;
  for (int v : flat) {
    if (v < 0) return std::nullopt;
    order += v;
  }
  if (order > max_order_) return std::nullopt;
  return static_cast<std::size_t>(rank_of(flat, order));
}

std::size_t IndexSet::rank(const MultiIndex& a) const {
  if (a.dims() != dims_ || a.cells() != cells_) {
    throw std::out_of_range("IndexSet::rank: shape mismatch");
  }
  const auto r = find(a.flat());
  if (!r) {
    throw std::out_of_range("IndexSet::rank: |a| = " +
                            std::to_string(a.order()) + " exceeds P = " +
                            std::to_string(max_order_));
  }
  return *r;
}

std::optional<std::size_t> IndexSet::raised(std::size_t rank,
                                            int position) const {
  if (orders_[rank] + 1 > max_order_) return std::nullopt;
  thread_local std::vector<int> buf;
  const auto deg = degrees(rank);
  buf.assign(deg.begin(), deg.end());
  buf[static_cast<std::size_t>(position)] += 1;
  return static_cast<std::size_t>(rank_of(buf, orders_[rank] + 1));
}

}  // namespace chaosbsde
