#include "chaosbsde/hermite.hpp"

#include <stdexcept>
#include <string>

namespace chaosbsde {

namespace {

void check_degree(int n) {
  if (n < 0 || n > kMaxHermiteDegree) {
    throw std::out_of_range("hermite degree " + std::to_string(n) +
                            " outside [0, " +
                            std::to_string(kMaxHermiteDegree) + "]");
  }
}

}  // namespace

double hermite(int n, double x) {
  check_degree(n);
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = (x * cur - prev) / static_cast<double>(k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_all(int n_max, double x, std::span<double> out) {
  check_degree(n_max);
  if (out.size() < static_cast<std::size_t>(n_max) + 1) {
    throw std::invalid_argument("hermite_all: output span too small");
  }
  out[0] = 1.0;
  if (n_max == 0) return;
  out[1] = x;
  for (int k = 1; k < n_max; ++k) {
    out[k + 1] = (x * out[k] - out[k - 1]) / static_cast<double>(k + 1);
  }
}

std::vector<double> hermite_all(int n_max, double x) {
  check_degree(n_max);
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  hermite_all(n_max, x, out);
  return out;
}

}  // namespace chaosbsde
