#include "mdplab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace mdplab::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_normal_sf(double t) {
  if (t < 20.0) return std::log(0.5 * std::erfc(t / std::sqrt(2.0)));
  // Mills ratio by continued fraction: R(t) = 1/(t+ 1/(t+ 2/(t+ 3/(t+ ...))))
  double frac = t;
  for (int k = 60; k >= 1; --k) frac = t + k / frac;
  return -0.5 * t * t - 0.5 * std::log(2.0 * 3.14159265358979323846) - std::log(frac);
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_binomial_half_upper(std::size_t n, std::size_t k) {
  if (k == 0) return 0.0;
  if (k > n) return -kInf;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  double acc = -kInf;
  for (std::size_t j = k; j <= n; ++j) {
    const double log_choose = lg_n1 - std::lgamma(static_cast<double>(j) + 1.0) -
                              std::lgamma(static_cast<double>(n - j) + 1.0);
    acc = log_sum_exp(acc, log_choose + log_half_n);
  }
  return acc;
}

Interval wilson(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Proportion proportion(std::size_t count, std::size_t trials) {
  Proportion r;
  r.count = count;
  r.trials = trials;
  r.p_hat = trials ? static_cast<double>(count) / static_cast<double>(trials) : 0.0;
  r.ci = wilson(count, trials);
  r.zero_count = (count == 0);
  r.rule_of_three = trials ? 3.0 / static_cast<double>(trials) : 1.0;
  if (r.zero_count) r.ci.hi = std::min(r.ci.hi, r.rule_of_three);
  return r;
}

}  // namespace mdplab::stats
