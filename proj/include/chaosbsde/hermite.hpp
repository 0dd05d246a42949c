#pragma once

#include <span>
#include <vector>

namespace chaosbsde {

/// Largest Hermite degree accepted by the evaluators.
inline constexpr int kMaxHermiteDegree = 16;

/// Normalized Hermite polynomial H_n = He_n / n!, so that
/// exp(t x - t^2 / 2) = sum_n t^n H_n(x) and H_n' = H_{n-1}.
///
/// Evaluated with the forward recurrence (n+1) H_{n+1} = x H_n - H_{n-1}.
/// Throws std::out_of_range for n < 0 or n > kMaxHermiteDegree.
double hermite(int n, double x);

/// Fills out[k] = H_k(x) for k = 0..n_max in one recurrence pass.
/// `out` must hold at least n_max + 1 values.
void hermite_all(int n_max, double x, std::span<double> out);

std::vector<double> hermite_all(int n_max, double x);

}  // namespace chaosbsde
