#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chaosbsde/problems.hpp"

namespace chaosbsde {

struct OracleEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Standard normal CDF, 0.5 erfc(-x / sqrt 2) (libm erfc: relative error
/// within a few ulp, so absolute error well below 1e-12).
double normal_cdf(double x);

double bs_call_price(double s0, double strike, double r, double sigma, double T);
/// dPrice/dS0 = Phi(d1).
double bs_call_delta(double s0, double strike, double r, double sigma, double T);

/// e^{-rT} E[xi] by direct simulation on {0, T} and the monitoring times,
/// under the risk-neutral drift mu = r for market problems.
OracleEstimate mc_price(const Problem& problem, std::size_t N,
                        std::uint64_t seed, int threads = 0);

/// Z_0 = vol^T diag(S0) grad_{S0} Y_0 from central differences with common
/// random numbers and relative bump `bump` of each S0 component.
std::vector<OracleEstimate> mc_delta(const Problem& problem, std::size_t N,
                                     double bump, std::uint64_t seed,
                                     int threads = 0);

/// E_t[functional(B)] given the Brownian path up to t (`prefix`, last time t),
/// by resampling the path on `future` (times > t) N times.
OracleEstimate nested_ce(const PathTable& prefix, std::span<const double> future,
                         std::size_t N,
                         const std::function<double(const PathTable&)>& functional,
                         std::uint64_t seed, std::uint32_t tag = 0);

}  // namespace chaosbsde
