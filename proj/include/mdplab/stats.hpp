#pragma once

#include <cstddef>
#include <limits>

namespace mdplab::stats {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x);

/// log P(Z > t) for standard normal Z, accurate far into the tail.
double log_normal_sf(double t);

/// log P(S >= k) for S ~ Binomial(n, 1/2).
double log_binomial_half_upper(std::size_t n, std::size_t k);

double log_sum_exp(double a, double b);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// 95% Wilson score interval for a binomial proportion.
Interval wilson(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Estimate of a small probability from Monte Carlo counts.
struct Proportion {
  std::size_t count = 0;
  std::size_t trials = 0;
  double p_hat = 0.0;
  Interval ci;
  bool zero_count = false;
  double rule_of_three = 0.0;  ///< 3 / trials; the 95% upper bound when count == 0
};

Proportion proportion(std::size_t count, std::size_t trials);

}  // namespace mdplab::stats
