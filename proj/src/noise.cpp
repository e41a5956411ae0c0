#include "mdplab/noise.hpp"

#include "mdplab/errors.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/stats.hpp"

#include <cmath>
#include <vector>

namespace mdplab {

std::string_view to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::uniform: return "uniform";
    case NoiseFamily::rademacher: return "rademacher";
  }
  return "unknown";
}

NoiseFamily noise_family_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseFamily::gaussian;
  if (s == "laplace") return NoiseFamily::laplace;
  if (s == "uniform") return NoiseFamily::uniform;
  if (s == "rademacher") return NoiseFamily::rademacher;
  throw ContractViolation("unknown noise family '" + std::string(s) + "'");
}

NoiseSpec NoiseSpec::gaussian(double sd, int dim, double delta) {
  return {NoiseFamily::gaussian, 0.0, sd, dim, delta};
}
NoiseSpec NoiseSpec::laplace(double b, int dim, double delta) {
  return {NoiseFamily::laplace, 0.0, b, dim, delta};
}
NoiseSpec NoiseSpec::uniform(double half_width, int dim, double delta) {
  return {NoiseFamily::uniform, 0.0, half_width, dim, delta};
}
NoiseSpec NoiseSpec::rademacher(double c, int dim, double delta) {
  return {NoiseFamily::rademacher, 0.0, c, dim, delta};
}

void NoiseSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ContractViolation("noise dimension out of range");
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ContractViolation("noise scale must be >= 0");
  if (!std::isfinite(location)) throw ContractViolation("noise location must be finite");
  if (!(delta > 0.0)) throw ContractViolation("noise delta must be > 0");
  if (delta >= max_finite_delta(*this)) {
    throw DivergenceError("E exp(delta|xi|) is infinite for delta = " + std::to_string(delta));
  }
}

double sample_component(const NoiseSpec& spec, rng::Stream& s) {
  switch (spec.family) {
    case NoiseFamily::gaussian:
      return spec.location + spec.scale * s.normal();
    case NoiseFamily::laplace: {
      const double u = s.uniform();
      const double z = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
      return spec.location + spec.scale * z;
    }
    case NoiseFamily::uniform:
      return spec.location + spec.scale * (2.0 * s.uniform() - 1.0);
    case NoiseFamily::rademacher:
      return spec.location + ((s.next_u64() >> 63) ? spec.scale : -spec.scale);
  }
  return 0.0;
}

Vec sample(const NoiseSpec& spec, rng::Stream& s) {
  Vec v(spec.dim);
  for (int j = 0; j < spec.dim; ++j) v(j) = sample_component(spec, s);
  return v;
}

double component_variance(const NoiseSpec& spec) {
  const double b = spec.scale;
  switch (spec.family) {
    case NoiseFamily::gaussian: return b * b;
    case NoiseFamily::laplace: return 2.0 * b * b;
    case NoiseFamily::uniform: return b * b / 3.0;
    case NoiseFamily::rademacher: return b * b;
  }
  return 0.0;
}

double component_abs_mean(const NoiseSpec& spec) {
  const double mu = spec.location;
  const double b = spec.scale;
  if (b == 0.0) return std::abs(mu);
  switch (spec.family) {
    case NoiseFamily::gaussian:
      return b * std::sqrt(2.0 / 3.14159265358979323846) * std::exp(-mu * mu / (2.0 * b * b)) +
             mu * (1.0 - 2.0 * stats::normal_cdf(-mu / b));
    case NoiseFamily::laplace:
      return std::abs(mu) + b * std::exp(-std::abs(mu) / b);
    case NoiseFamily::uniform: {
      const double lo = mu - b;
      const double hi = mu + b;
      if (lo >= 0.0) return mu;
      if (hi <= 0.0) return -mu;
      return (lo * lo + hi * hi) / (2.0 * (hi - lo));
    }
    case NoiseFamily::rademacher:
      return 0.5 * (std::abs(mu + b) + std::abs(mu - b));
  }
  return 0.0;
}

double abs_mean(const NoiseSpec& spec) { return spec.dim * component_abs_mean(spec); }

double abs_second_moment(const NoiseSpec& spec) {
  const double second = component_variance(spec) + spec.location * spec.location;
  const double first = component_abs_mean(spec);
  const double p = spec.dim;
  return p * second + p * (p - 1.0) * first * first;
}

double abs_max(const NoiseSpec& spec) {
  if (!spec.bounded()) return stats::kInf;
  return spec.dim * (std::abs(spec.location) + spec.scale);
}

double max_finite_delta(const NoiseSpec& spec) {
  if (spec.family == NoiseFamily::laplace && spec.scale > 0.0) return 1.0 / spec.scale;
  return stats::kInf;
}

double centred_log_mgf(const NoiseSpec& spec, double t) {
  const double b = spec.scale;
  const double x = b * t;
  switch (spec.family) {
    case NoiseFamily::gaussian:
      return 0.5 * x * x;
    case NoiseFamily::laplace:
      if (std::abs(x) >= 1.0) throw DivergenceError("laplace MGF diverges for |scale*t| >= 1");
      return -std::log1p(-x * x);
    case NoiseFamily::uniform: {
      const double ax = std::abs(x);
      if (ax < 1e-4) return ax * ax / 6.0 - ax * ax * ax * ax / 180.0;
      return ax - std::log(2.0 * ax) + std::log1p(-std::exp(-2.0 * ax));
    }
    case NoiseFamily::rademacher: {
      const double ax = std::abs(x);
      return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
    }
  }
  return 0.0;
}

namespace {

double component_exp_abs_moment(const NoiseSpec& spec, double d) {
  const double mu = std::abs(spec.location);  // |xi| has the same law for +/- location
  const double b = spec.scale;
  if (d == 0.0) return 1.0;
  if (b == 0.0) return std::exp(d * mu);
  switch (spec.family) {
    case NoiseFamily::gaussian: {
      const double g = std::exp(0.5 * d * d * b * b);
      return g * (std::exp(d * mu) * stats::normal_cdf(mu / b + d * b) +
                  std::exp(-d * mu) * stats::normal_cdf(-mu / b + d * b));
    }
    case NoiseFamily::laplace: {
      if (d * b >= 1.0) throw DivergenceError("laplace exponential moment diverges: delta >= 1/scale");
      const double left = std::exp(-mu / b) / (2.0 * (1.0 - d * b));
      const double mid = std::exp(-mu / b) * std::expm1(mu * (d + 1.0 / b)) / (2.0 * (1.0 + d * b));
      const double right = std::exp(d * mu) / (2.0 * (1.0 - d * b));
      return left + mid + right;
    }
    case NoiseFamily::uniform: {
      const double lo = mu - b;
      const double hi = mu + b;
      const double w = hi - lo;
      if (lo >= 0.0) return (std::exp(d * hi) - std::exp(d * lo)) / (d * w);
      return (std::expm1(d * hi) + std::expm1(-d * lo)) / (d * w);
    }
    case NoiseFamily::rademacher:
      return 0.5 * (std::exp(d * std::abs(mu + b)) + std::exp(d * std::abs(mu - b)));
  }
  return 1.0;
}

}  // namespace

MomentEstimate exponential_moment(const NoiseSpec& spec, double delta) {
  if (!(delta >= 0.0)) throw ContractViolation("delta must be >= 0");
  if (delta >= max_finite_delta(spec)) {
    throw DivergenceError("E exp(delta|xi|) is infinite: delta must be below " +
                          std::to_string(max_finite_delta(spec)));
  }
  MomentEstimate r;
  r.closed_form = true;
  r.value = std::pow(component_exp_abs_moment(spec, delta), spec.dim);
  return r;
}

MomentEstimate exponential_moment_mc(const NoiseSpec& spec, double delta, std::size_t samples,
                                     std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ContractViolation("delta must be >= 0");
  if (delta >= max_finite_delta(spec)) {
    throw DivergenceError("E exp(delta|xi|) is infinite for this delta");
  }
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> values(samples);
  kernels::map_indices(chunks, [&](std::size_t c) {
    rng::Stream s(seed, c);
    const std::size_t end = std::min(samples, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) values[i] = std::exp(delta * norm1(sample(spec, s)));
    return 0;
  });
  const auto ms = kernels::mean_se(values);
  return {ms.mean, ms.se, false, samples};
}

}  // namespace mdplab
