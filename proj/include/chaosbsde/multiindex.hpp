#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chaosbsde {

/// Default cap on the number of indices an IndexSet may hold.
inline constexpr std::uint64_t kDefaultIndexCap = std::uint64_t{1} << 24;

/// Hermite degrees a^l_j for d Brownian coordinates and M basis cells.
///
/// Stored flattened and coordinate-major: entry (l, j) lives at l * M + j.
/// Cell and coordinate arguments are 0-based.
class MultiIndex {
 public:
  MultiIndex(int dims, int cells);
  MultiIndex(int dims, int cells, std::vector<int> flat);

  int dims() const { return dims_; }
  int cells() const { return cells_; }
  int width() const { return dims_ * cells_; }

  int operator()(int coord, int cell) const {
    return degrees_[static_cast<std::size_t>(coord * cells_ + cell)];
  }
  void set(int coord, int cell, int degree);

  std::span<const int> flat() const { return degrees_; }

  /// Total degree |a|.
  int order() const;
  /// log(a!) = sum of log-factorials of the entries.
  double log_factorial() const;
  /// a! as a double (exact for moderate degrees).
  double factorial() const;

  bool is_zero() const { return order() == 0; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  int dims_;
  int cells_;
  std::vector<int> degrees_;
};

/// Appends zero cells to every coordinate block. Throws if cells_new < #a.
MultiIndex pad_index(const MultiIndex& a, int cells_new);

/// Zeroes every cell after the first `r` (1-based r in [1, #a]).
MultiIndex truncate_prefix(const MultiIndex& a, int r);

/// Number of multi-indices with |a| <= order over `width` entries,
/// i.e. C(order + width, width). Throws std::overflow_error if the count
/// does not fit in 64 bits.
std::uint64_t index_count(int order, std::uint64_t width);

/// All multi-indices with |a| <= P over d coordinates and M cells, in graded
/// lexicographic order: by |a|, then lexicographically (ascending) on the
/// flattened degree vector. Rank 0 is the zero index. Immutable once built.
class IndexSet {
 public:
  IndexSet(int max_order, int cells, int dims,
           std::uint64_t cap = kDefaultIndexCap);

  int max_order() const { return max_order_; }
  int cells() const { return cells_; }
  int dims() const { return dims_; }
  int width() const { return width_; }
  std::size_t size() const { return size_; }

  /// Flattened degrees of the index with the given rank.
  std::span<const std::uint8_t> degrees(std::size_t rank) const {
    return {degrees_.data() + rank * static_cast<std::size_t>(width_),
            static_cast<std::size_t>(width_)};
  }
  int degree(std::size_t rank, int coord, int cell) const {
    return degrees(rank)[static_cast<std::size_t>(coord * cells_ + cell)];
  }
  MultiIndex at(std::size_t rank) const;

  int order(std::size_t rank) const { return orders_[rank]; }
  /// a! for the index with the given rank.
  double factorial(std::size_t rank) const { return factorials_[rank]; }

  /// Rank of `a`; throws std::out_of_range if it is not in the set.
  std::size_t rank(const MultiIndex& a) const;
  /// Rank of a flattened degree vector, or nullopt if not in the set.
  std::optional<std::size_t> find(std::span<const int> flat) const;

  /// Rank of the index obtained by raising entry `position` of `rank` by one,
  /// or nullopt if that exceeds the order cap.
  std::optional<std::size_t> raised(std::size_t rank, int position) const;

  /// Product-recurrence data: the index with the last nonzero entry removed,
  /// and that entry's flat position and degree. Undefined for rank 0.
  std::uint32_t parent(std::size_t rank) const { return parents_[rank]; }
  std::uint16_t last_position(std::size_t rank) const {
    return last_positions_[rank];
  }
  std::uint8_t last_degree(std::size_t rank) const {
    return last_degrees_[rank];
  }

  /// Number of leading cells the index touches (0 for the zero index):
  /// one past the largest cell with a nonzero degree in any coordinate.
  int support(std::size_t rank) const { return supports_[rank]; }

 private:
  std::uint64_t rank_of(std::span<const int> flat, int order) const;
  std::uint64_t compositions(int total, std::uint64_t parts) const;

  int max_order_;
  int cells_;
  int dims_;
  int width_;
  std::size_t size_;
  std::vector<std::uint8_t> degrees_;
  std::vector<std::uint8_t> orders_;
  std::vector<double> factorials_;
  std::vector<std::uint32_t> parents_;
  std::vector<std::uint16_t> last_positions_;
  std::vector<std::uint8_t> last_degrees_;
  std::vector<std::uint16_t> supports_;
  // below_order_[k] = number of indices with |a| < k.
  std::vector<std::uint64_t> below_order_;
};

}  // namespace chaosbsde
