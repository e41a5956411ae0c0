#include "mdplab/errors.hpp"
#include "mdplab/poisson.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mdplab;
using namespace mdplab::poisson;
using chains::ChainModel;

namespace {

ChainModel ar(double a, NoiseSpec n = NoiseSpec::gaussian(1.0)) { return ChainModel::linear_ar(a, n); }

PoissonOptions mc(std::size_t N, std::size_t M, std::uint64_t seed = 1) {
  PoissonOptions o;
  o.N = N;
  o.M = M;
  o.seed = seed;
  o.use_closed_form = false;
  return o;
}

ObservableSpec centred_tanh_observable() {
  // Odd map, symmetric noise: the stationary law is symmetric, so E tanh(X) = 0.
  return ObservableSpec::tanh(1).with_centering(Vec::Zero(1), 0.0, true);
}

}  // namespace

TEST_CASE("Monte Carlo U matches the geometric series on AR(1)") {
  const auto model = ar(0.5);
  const auto obs = center(ObservableSpec::identity(1), model, 0);
  for (double x : {-2.0, 0.5, 3.0}) {
    const auto u = solve_U(model, obs, vec_of({x}), 60, 10000, 7);
    CAPTURE(x);
    CHECK(u.value(0) == doctest::Approx(oracle::ar1_U(0.5, x)).epsilon(0.02));
    CHECK(std::isfinite(u.se(0)));
    CHECK(std::isfinite(u.tail_bound));
  }
}

TEST_CASE("closed form U on AR(1)") {
  const auto model = ar(0.5);
  PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
  CHECK(U.closed_form());
  CHECK(U(vec_of({3.0}))(0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(U.closed_form_B()(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("zero observable gives U = 0 exactly") {
  const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
  PoissonSolution U(model, ObservableSpec::zero(1), mc(20, 200));
  for (double x : {-3.0, 0.0, 2.5}) CHECK(U(vec_of({x}))(0) == 0.0);
  const auto r = poisson_residual(U, vec_of({1.0}), 50, 3);
  CHECK(r.residual(0) == 0.0);
}

TEST_CASE("odd model, odd observable: U(0) = 0 within SE") {
  const auto model = ChainModel::scaled_tanh(0.6, 1, NoiseSpec::laplace(0.7));
  PoissonSolution U(model, centred_tanh_observable(), mc(30, 2000, 5));
  const auto e = U.evaluate(vec_of({0.0}));
  CHECK(std::abs(e.value(0)) <= 3.0 * e.se(0) + e.tail_bound + 1e-15);
}

TEST_CASE("truncation that is too short is rejected with a suggestion") {
  const auto model = ChainModel::scaled_tanh(0.9, 1, NoiseSpec::gaussian(1.0));
  PoissonOptions o = mc(5, 100);
  o.tail_tolerance = 1e-3;
  PoissonSolution U(model, centred_tanh_observable(), o);
  try {
    U.evaluate(vec_of({1.0}));
    FAIL("expected truncation error");
  } catch (const TruncationError& e) {
    CHECK(e.suggested_n() > 5);
    const std::size_t n = e.suggested_n();
    const double tail = 1.0 * (std::max(1.0, stationary_abs_mean_bound(model)) + 1.0) *
                        std::pow(0.9, double(n + 1)) / 0.1;
    CHECK(tail <= 1e-3);
  }
}

TEST_CASE("Poisson residual") {
  SUBCASE("closed form is exact to rounding") {
    const auto model = ar(0.5);
    PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
    for (double x : {-4.0, 0.0, 1.5, 10.0}) {
      const auto r = poisson_residual(U, vec_of({x}), 10, 1);
      CHECK(std::abs(r.residual(0)) <= 1e-14 * (1.0 + std::abs(x)));
    }
  }
  SUBCASE("nonlinear model is self-consistent") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
    PoissonOptions o = mc(0, 1000, 9);
    o.tail_tolerance = 1e-4;
    PoissonSolution U(model, centred_tanh_observable(), o);
    for (double x : {-1.5, 0.3, 2.0}) {
      const auto r = poisson_residual(U, vec_of({x}), 200, 4);
      CAPTURE(x);
      CHECK(std::abs(r.residual(0)) <= 3.0 * r.combined_error);
    }
  }
}

TEST_CASE("U-hat is Lipschitz with constant K/(1-rho)") {
  const auto model = ChainModel::scaled_tanh(0.7, 1, NoiseSpec::uniform(1.0));
  PoissonSolution U(model, centred_tanh_observable(), mc(0, 1000, 3));
  const double L = U.lipschitz_U();
  CHECK(L == doctest::Approx(1.0 / 0.3));
  rng::Stream s(13, 0);
  for (int t = 0; t < 40; ++t) {
    const Vec a = vec_of({6.0 * s.uniform() - 3.0});
    const Vec b = vec_of({6.0 * s.uniform() - 3.0});
    const auto ea = U.evaluate(a);
    const auto eb = U.evaluate(b);
    const double slack = 2.0 * (ea.combined_error() + eb.combined_error());
    CHECK(std::abs(ea.value(0) - eb.value(0)) <= L * std::abs(a(0) - b(0)) + slack);
  }
  CHECK(U.cache_size() >= 40);
}

TEST_CASE("martingale decomposition on AR(1)") {
  const auto model = ar(0.5);
  PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
  const auto traj = chains::simulate(model, vec_of({1.0}), 10000, {21, 0});
  const auto d = martingale_decompose(U, traj);
  CHECK(d.closed_form);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.increments.size(); ++i) {
    worst = std::max(worst, std::abs(d.increments[i](0) - 2.0 * traj.noises[i](0)));
  }
  CHECK(worst <= 1e-12);
  CHECK(d.max_telescoping_residual <= 1e-10);
  CHECK(d.corrector[0](0) == 0.0);
}

TEST_CASE("martingale increments have conditional mean zero") {
  SUBCASE("closed form, many paths") {
    const auto model = ar(0.5);
    PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
    std::vector<double> z;
    for (std::uint64_t k = 0; k < 10000; ++k) {
      const auto t = chains::simulate(model, vec_of({0.5}), 3, {31, k});
      const auto d = martingale_decompose(U, t);
      z.push_back(d.increments[2](0));
    }
    const auto ms = kernels::mean_se(z);
    CHECK(std::abs(ms.mean) <= 3.0 * ms.se);
  }
  SUBCASE("Monte Carlo U, one-step draws from a fixed state") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
    PoissonSolution U(model, centred_tanh_observable(), mc(0, 400, 2));
    const Vec x = vec_of({0.8});
    Vec se;
    const Vec pu = U.conditional_mean(x, 1000, {41, 0}, &se);
    chains::NoiseDraw fresh(model.noise(), {43, 0});
    std::vector<double> z;
    for (int k = 0; k < 1000; ++k) z.push_back(U(model.step(x, fresh.next()))(0) - pu(0));
    const auto ms = kernels::mean_se(z);
    CHECK(std::abs(ms.mean) <= 3.0 * std::hypot(ms.se, se(0)));
  }
  SUBCASE("Monte Carlo U telescopes within the propagated error") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
    PoissonSolution U(model, centred_tanh_observable(), mc(0, 300, 2));
    const auto t = chains::simulate(model, vec_of({1.0}), 60, {51, 0});
    const auto d = martingale_decompose(U, t, 64, 3);
    CHECK_FALSE(d.closed_form);
    CHECK(d.max_telescoping_residual <= 3.0 * d.propagated_error);
  }
}

TEST_CASE("conditional covariance") {
  SUBCASE("AR(1) gives 4 everywhere") {
    const auto model = ar(0.5);
    PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
    CHECK(conditional_covariance(U, vec_of({-3.0}), 10, {1, 0}).B_hat(0, 0) == doctest::Approx(4.0));
    PoissonSolution Umc(model, center(ObservableSpec::identity(1), model, 0), mc(40, 400, 4));
    const auto c = conditional_covariance(Umc, vec_of({1.0}), 4000, {1, 0});
    CHECK(std::abs(c.B_hat(0, 0) - 4.0) <= 3.0 * c.se(0, 0) + 0.05);
  }
  SUBCASE("constant noise gives zero") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec{NoiseFamily::gaussian, 0.0, 0.0, 1, 0.5});
    PoissonSolution U(model, centred_tanh_observable(), mc(20, 10, 1));
    CHECK(conditional_covariance(U, vec_of({0.7}), 50, {2, 0}).B_hat(0, 0) == 0.0);
  }
  SUBCASE("scalar B(x) is nonnegative and bounded") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
    PoissonSolution U(model, centred_tanh_observable(), mc(0, 300, 6));
    const double K = 1.0, ell = 1.0, rho = 0.5;
    const double bound = 4.0 * (K * ell) * (K * ell) / ((1 - rho) * (1 - rho)) * abs_second_moment(model.noise());
    for (double x : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
      const auto c = conditional_covariance(U, vec_of({x}), 200, {3, 0});
      CHECK(c.B_hat(0, 0) >= 0.0);
      CHECK(c.B_hat(0, 0) <= bound + 3.0 * c.se(0, 0));
    }
  }
}

TEST_CASE("B(x) is Lipschitz over sampled pairs") {
  const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::uniform(1.0));
  PoissonSolution U(model, centred_tanh_observable(), mc(0, 300, 6));
  const double K = 1.0, ell = 1.0, rho = 0.5;
  const double L = 4.0 * K * K * ell * rho / ((1 - rho) * (1 - rho)) * abs_mean(model.noise());
  rng::Stream s(5, 5);
  for (int t = 0; t < 6; ++t) {
    const Vec a = vec_of({4.0 * s.uniform() - 2.0});
    const Vec b = vec_of({4.0 * s.uniform() - 2.0});
    // Common inner draws keep the difference quotient honest.
    const auto ca = conditional_covariance(U, a, 300, {77, 0});
    const auto cb = conditional_covariance(U, b, 300, {77, 0});
    const double tol = 3.0 * (ca.se(0, 0) + cb.se(0, 0));
    CHECK(std::abs(ca.B_hat(0, 0) - cb.B_hat(0, 0)) <= L * std::abs(a(0) - b(0)) + tol);
  }
}

TEST_CASE("series covariance") {
  SUBCASE("AR(1) long-run variance") {
    const auto model = ar(0.5);
    const auto c = asymptotic_covariance_series(model, center(ObservableSpec::identity(1), model, 0), 40, 100000, 8);
    CHECK(c.method == CovarianceMethod::series);
    CHECK(c.B_hat(0, 0) == doctest::Approx(oracle::ar1_long_run_var(0.5, 1.0)).epsilon(0.05));
    CHECK(std::abs(c.B_hat(0, 0) - 4.0) <= 4.0 * c.se(0, 0));
    CHECK(c.psd_ok());
  }
  SUBCASE("zero observable") {
    const auto model = ar(0.5);
    const auto c = asymptotic_covariance_series(model, ObservableSpec::zero(1), 10, 100, 8);
    CHECK(c.B_hat(0, 0) == 0.0);
  }
  SUBCASE("i.i.d. chain gives the stationary variance") {
    const auto model = ar(0.0, NoiseSpec::uniform(1.0));
    const auto c = asymptotic_covariance_series(model, center(ObservableSpec::identity(1), model, 0), 5, 50000, 8);
    CHECK(std::abs(c.B_hat(0, 0) - 1.0 / 3.0) <= 4.0 * c.se(0, 0));
  }
  SUBCASE("too-short truncation is reported") {
    const auto model = ar(0.95);
    CHECK_THROWS_AS(asymptotic_covariance_series(model, center(ObservableSpec::identity(1), model, 0), 3, 1000, 8),
                    TruncationError);
  }
  SUBCASE("two-dimensional estimate is symmetric and PSD") {
    Mat A(2, 2);
    A << 0.5, 0.2, -0.1, 0.3;
    const auto model = ChainModel::linear_ar(A, NoiseSpec::gaussian(1.0, 2));
    const auto obs = center(ObservableSpec::identity(2), model, 0);
    const auto c = asymptotic_covariance_series(model, obs, 40, 40000, 2);
    CHECK(c.B_hat(0, 1) == c.B_hat(1, 0));
    CHECK(c.psd_ok());
    const auto exact = closed_form_covariance(model, obs);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) CHECK(std::abs(c.B_hat(i, j) - exact.B_hat(i, j)) <= 4.0 * c.se(i, j) + 1e-3);
    }
  }
}

TEST_CASE("ergodic covariance") {
  const auto model = ar(0.5);
  const auto obs = center(ObservableSpec::identity(1), model, 0);
  PoissonSolution U(model, obs);
  SUBCASE("exact B(x) averages to itself") {
    const auto c = asymptotic_covariance_ergodic(U, 1000, 3, 0);
    CHECK(c.B_hat(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("Monte Carlo B(x) and agreement with the series route") {
    const auto e = asymptotic_covariance_ergodic(U, 100000, 3, 64);
    CHECK(e.B_hat(0, 0) == doctest::Approx(4.0).epsilon(0.05));
    const auto s = asymptotic_covariance_series(model, obs, 40, 100000, 8);
    const double joint = std::hypot(e.se(0, 0), s.se(0, 0));
    CHECK(std::abs(e.B_hat(0, 0) - s.B_hat(0, 0)) <= 3.0 * joint);
  }
}

TEST_CASE("two routes agree on a nonlinear model") {
  const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
  const auto obs = centred_tanh_observable();
  PoissonSolution U(model, obs, mc(0, 1000, 17));
  const auto e = asymptotic_covariance_ergodic(U, 300, 5, 16);
  const auto s = asymptotic_covariance_series(model, obs, 30, 100000, 6);
  const double joint = std::hypot(e.se(0, 0), s.se(0, 0));
  CAPTURE(e.B_hat(0, 0));
  CAPTURE(s.B_hat(0, 0));
  CHECK(std::abs(e.B_hat(0, 0) - s.B_hat(0, 0)) <= 3.0 * joint);
}

TEST_CASE("increment moments") {
  SUBCASE("gaussian AR(1): E|zeta|^2 = 4") {
    const auto model = ar(0.5);
    PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
    std::vector<MartingaleDecomposition> ds;
    for (std::uint64_t k = 0; k < 400; ++k) {
      ds.push_back(martingale_decompose(U, chains::simulate(model, vec_of({0.0}), 50, {61, k})));
    }
    const auto r = increment_moment_check(ds, 0.75, 0.1);
    CHECK(std::abs(r.mean_second - 4.0) <= 3.0 * r.mean_second_se);
    CHECK_FALSE(r.growth);
    CHECK(r.second.size() == 50);
  }
  SUBCASE("rademacher: |zeta| = 2 so the moment is 8 e^{2 delta}") {
    const auto model = ar(0.5, NoiseSpec::rademacher(1.0));
    PoissonSolution U(model, center(ObservableSpec::identity(1), model, 0));
    std::vector<MartingaleDecomposition> ds;
    for (std::uint64_t k = 0; k < 20; ++k) {
      ds.push_back(martingale_decompose(U, chains::simulate(model, vec_of({0.0}), 30, {62, k})));
    }
    const double delta = 0.3;
    const auto r = increment_moment_check(ds, 0.75, delta);
    CHECK(r.max_exp_third <= 8.0 * std::exp(2.0 * delta) * (1 + 1e-12));
    CHECK(r.mean_exp_third == doctest::Approx(8.0 * std::exp(2.0 * delta)).epsilon(1e-12));
    const auto r0 = increment_moment_check(ds, 0.75, 0.0);
    CHECK(r0.mean_exp_third == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("results do not depend on the backend") {
  const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
  PoissonOptions a = mc(20, 500, 3);
  PoissonOptions b = a;
  b.exec = kernels::kSerial;
  kernels::set_worker_count(4);
  const auto ua = PoissonSolution(model, centred_tanh_observable(), a).evaluate(vec_of({0.4}));
  const auto ub = PoissonSolution(model, centred_tanh_observable(), b).evaluate(vec_of({0.4}));
  CHECK(ua.value(0) == ub.value(0));
  CHECK(ua.se(0) == ub.se(0));
}

TEST_CASE("stored and regenerated path noise give identical estimates") {
  const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::laplace(0.5));
  PoissonOptions a = mc(25, 300, 3);
  PoissonOptions b = a;
  b.store_noise = false;
  const auto ua = PoissonSolution(model, centred_tanh_observable(), a).evaluate(vec_of({-0.4}));
  const auto ub = PoissonSolution(model, centred_tanh_observable(), b).evaluate(vec_of({-0.4}));
  CHECK(ua.value(0) == ub.value(0));
}
