#pragma once
// Reference values computed independently of the library: textbook closed
// forms plus Boost.Math distributions and quadrature.

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Scalar AR(1) X' = aX + xi with Var xi = s2 and H(x) = x.
inline double ar1_U(double a, double x) { return x / (1.0 - a); }
inline double ar1_stationary_var(double a, double s2) { return s2 / (1.0 - a * a); }
inline double ar1_long_run_var(double a, double s2) { return s2 / ((1.0 - a) * (1.0 - a)); }

inline double normal_sf(double t) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), t));
}
inline double normal_cdf(double t) { return boost::math::cdf(boost::math::normal_distribution<double>(), t); }

// E exp(delta |Z|), Z ~ N(0, s^2).
inline double gaussian_exp_abs(double s, double delta) {
  return 2.0 * std::exp(0.5 * delta * delta * s * s) * normal_cdf(delta * s);
}

// Same quantity by quadrature over the density.
inline double gaussian_exp_abs_quadrature(double s, double delta) {
  auto f = [&](double z) { return std::exp(delta * std::abs(z)) * std::exp(-0.5 * z * z / (s * s)); };
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -40.0 * s, 40.0 * s, 15, 1e-14);
  return v / (s * std::sqrt(2.0 * kPi));
}

// P(S >= k), S ~ Binomial(n, 1/2).
inline double binomial_half_upper(unsigned n, unsigned k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  boost::math::binomial_distribution<double> b(n, 0.5);
  return boost::math::cdf(boost::math::complement(b, k - 1));
}

// Inverse of a symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a, b, c;
};
inline Sym2 inverse(Sym2 m) {
  const double det = m.a * m.c - m.b * m.b;
  return {m.c / det, -m.b / det, m.a / det};
}

}  // namespace oracle
