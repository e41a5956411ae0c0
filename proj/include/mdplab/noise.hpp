#pragma once

#include "mdplab/rng.hpp"
#include "mdplab/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace mdplab {

enum class NoiseFamily { gaussian, laplace, uniform, rademacher };

std::string_view to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(std::string_view s);

/// Law of the i.i.d. driving noise. Components are independent copies of a
/// scalar law symmetric about `location`:
///   gaussian    N(location, scale^2)
///   laplace     location + Laplace(scale)            (density e^{-|z|/scale} / 2 scale)
///   uniform     U[location - scale, location + scale]
///   rademacher  location +/- scale with probability 1/2
/// scale == 0 gives a degenerate (constant) noise.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double location = 0.0;
  double scale = 1.0;
  int dim = 1;
  double delta = 0.5;  ///< exponential-moment parameter for E e^{delta |xi|}

  static NoiseSpec gaussian(double sd, int dim = 1, double delta = 0.5);
  static NoiseSpec laplace(double b, int dim = 1, double delta = 0.5);
  static NoiseSpec uniform(double half_width, int dim = 1, double delta = 0.5);
  static NoiseSpec rademacher(double c, int dim = 1, double delta = 0.5);

  /// Throws ContractViolation on malformed parameters.
  void validate() const;

  bool bounded() const noexcept {
    return family == NoiseFamily::uniform || family == NoiseFamily::rademacher || scale == 0.0;
  }
  bool zero_mean() const noexcept { return location == 0.0; }
};

/// One scalar component.
double sample_component(const NoiseSpec& spec, rng::Stream& s);

/// Reflection about the centre of symmetry; maps the law to itself.
inline double reflect_component(const NoiseSpec& spec, double z) { return 2.0 * spec.location - z; }

Vec sample(const NoiseSpec& spec, rng::Stream& s);

/// Per-component variance.
double component_variance(const NoiseSpec& spec);
/// Per-component E|xi_j|.
double component_abs_mean(const NoiseSpec& spec);
/// E|xi|_1 over the whole vector.
double abs_mean(const NoiseSpec& spec);
/// E |xi|_1^2 over the whole vector.
double abs_second_moment(const NoiseSpec& spec);
/// Largest |xi|_1 for bounded laws, +inf otherwise.
double abs_max(const NoiseSpec& spec);

/// Supremum of delta for which E e^{delta|xi|} is finite (+inf when all are).
double max_finite_delta(const NoiseSpec& spec);

/// log E exp(t (xi_j - location)) for one centred component. Throws
/// DivergenceError where the transform is infinite.
double centred_log_mgf(const NoiseSpec& spec, double t);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  bool closed_form = false;
  std::size_t samples = 0;
};

/// E e^{delta |xi_1|_1}. All four families have closed forms; `samples` and
/// `seed` are used only by exponential_moment_mc.
MomentEstimate exponential_moment(const NoiseSpec& spec, double delta);

/// Monte Carlo estimate of the same quantity with its standard error.
MomentEstimate exponential_moment_mc(const NoiseSpec& spec, double delta, std::size_t samples,
                                     std::uint64_t seed);

}  // namespace mdplab
