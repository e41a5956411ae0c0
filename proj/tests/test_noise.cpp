#include "mdplab/errors.hpp"
#include "mdplab/noise.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mdplab;

TEST_CASE("exponential moment of the standard gaussian at delta = 1") {
  const auto e = exponential_moment(NoiseSpec::gaussian(1.0), 1.0);
  CHECK(e.closed_form);
  CHECK(e.value == doctest::Approx(oracle::gaussian_exp_abs(1.0, 1.0)).epsilon(1e-12));
  CHECK(e.value == doctest::Approx(2.7742859577).epsilon(1e-9));
  CHECK(e.value == doctest::Approx(oracle::gaussian_exp_abs_quadrature(1.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("closed-form exponential moments agree with Monte Carlo") {
  const NoiseSpec specs[] = {NoiseSpec::gaussian(0.7), NoiseSpec::laplace(0.5), NoiseSpec::uniform(1.5),
                             NoiseSpec::rademacher(0.8), NoiseSpec{NoiseFamily::gaussian, 0.4, 1.0, 1, 0.5},
                             NoiseSpec{NoiseFamily::laplace, -0.3, 0.4, 1, 0.5},
                             NoiseSpec{NoiseFamily::uniform, 0.5, 1.0, 2, 0.5}};
  for (const auto& s : specs) {
    CAPTURE(to_string(s.family));
    CAPTURE(s.location);
    const double delta = 0.8;
    const auto exact = exponential_moment(s, delta);
    const auto mc = exponential_moment_mc(s, delta, 400000, 11);
    CHECK(std::abs(exact.value - mc.value) < 4.0 * mc.se + 1e-12);
  }
}

TEST_CASE("laplace moment diverges beyond 1/b") {
  CHECK_THROWS_AS(exponential_moment(NoiseSpec::laplace(1.0), 1.0), DivergenceError);
  CHECK_THROWS_AS(NoiseSpec::laplace(1.0, 1, 2.0).validate(), DivergenceError);
  CHECK(exponential_moment(NoiseSpec::laplace(1.0), 0.0).value == 1.0);
}

TEST_CASE("moments of |xi|") {
  CHECK(component_abs_mean(NoiseSpec::gaussian(1.0)) == doctest::Approx(std::sqrt(2.0 / oracle::kPi)));
  CHECK(component_abs_mean(NoiseSpec::laplace(2.0)) == doctest::Approx(2.0));
  CHECK(component_abs_mean(NoiseSpec::uniform(3.0)) == doctest::Approx(1.5));
  CHECK(component_variance(NoiseSpec::laplace(2.0)) == doctest::Approx(8.0));
  CHECK(abs_max(NoiseSpec::rademacher(2.0, 3)) == 6.0);
  CHECK(std::isinf(abs_max(NoiseSpec::gaussian(1.0))));
  // E|xi|_1^2 for two independent N(0,1): 2 + 2 * (2/pi)
  CHECK(abs_second_moment(NoiseSpec::gaussian(1.0, 2)) == doctest::Approx(2.0 + 4.0 / oracle::kPi));
}

TEST_CASE("centred log-MGF closed forms") {
  CHECK(centred_log_mgf(NoiseSpec::gaussian(2.0), 0.5) == doctest::Approx(0.5));
  CHECK(centred_log_mgf(NoiseSpec::rademacher(1.0), 0.3) == doctest::Approx(std::log(std::cosh(0.3))));
  CHECK(centred_log_mgf(NoiseSpec::laplace(0.5), 1.0) == doctest::Approx(-std::log(1.0 - 0.25)));
  CHECK(centred_log_mgf(NoiseSpec::uniform(1.0), 2.0) == doctest::Approx(std::log(std::sinh(2.0) / 2.0)));
  CHECK(centred_log_mgf(NoiseSpec::uniform(1.0), 1e-6) == doctest::Approx(1e-12 / 6.0).epsilon(1e-6));
  CHECK(centred_log_mgf(NoiseSpec::rademacher(1.0), 400.0) == doctest::Approx(400.0 - std::log(2.0)));
  CHECK_THROWS_AS(centred_log_mgf(NoiseSpec::laplace(1.0), 1.0), DivergenceError);
}

TEST_CASE("reflection preserves the law") {
  const NoiseSpec s{NoiseFamily::uniform, 1.0, 0.5, 1, 0.5};
  rng::Stream st(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const double r = reflect_component(s, sample_component(s, st));
    CHECK(r >= 0.5);
    CHECK(r <= 1.5);
  }
}

TEST_CASE("malformed specs are rejected") {
  CHECK_THROWS_AS((NoiseSpec{NoiseFamily::gaussian, 0.0, -1.0, 1, 0.5}.validate()), ContractViolation);
  CHECK_THROWS_AS((NoiseSpec{NoiseFamily::gaussian, 0.0, 1.0, 0, 0.5}.validate()), ContractViolation);
  CHECK_THROWS_AS(noise_family_from_string("cauchy"), ContractViolation);
}
