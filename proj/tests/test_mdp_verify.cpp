#include "mdplab/errors.hpp"
#include "mdplab/mdp_verify.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace mdplab;
using namespace mdplab::verify;
using chains::ChainModel;

namespace {

ChainModel ar(double a, NoiseSpec n = NoiseSpec::gaussian(1.0)) { return ChainModel::linear_ar(a, n); }

poisson::PoissonSolution closed_U(const ChainModel& model) {
  return poisson::PoissonSolution(model, center(ObservableSpec::identity(model.dim()), model, 0));
}

// A PoissonSolution that is cheap to build; callers replace U via U_override.
poisson::PoissonSolution cheap_mc_U(const ChainModel& model, const ObservableSpec& obs) {
  poisson::PoissonOptions o;
  o.N = 10;
  o.M = 16;
  o.use_closed_form = false;
  o.tail_tolerance = 1e9;
  return poisson::PoissonSolution(model, obs, o);
}

ExperimentConfig config(std::vector<std::size_t> grid, std::size_t M, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.n_grid = std::move(grid);
  c.M = M;
  c.seed = seed;
  return c;
}

double log_phibar(double t) { return std::log(oracle::normal_sf(t)); }

}  // namespace

TEST_CASE("config validation names the field") {
  auto c = config({10, 100}, 10);
  CHECK_NOTHROW(c.validate());
  c.alpha = 0.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("alpha"), ContractViolation);
  c = config({100, 10}, 10);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n_grid"), ContractViolation);
  c = config({10}, 0);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("M"), ContractViolation);
  c = config({10}, 5);
  c.epsilon = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("epsilon"), ContractViolation);
}

TEST_CASE("tail estimate censors small counts") {
  const auto t0 = tail_estimate(100, 0.75, 0, 1000);
  CHECK(t0.zero_count);
  CHECK_FALSE(t0.has_exponent);
  CHECK(t0.rule_of_three == doctest::Approx(3e-3));
  CHECK(t0.exponent_ci.hi == doctest::Approx(std::log(3e-3) / 10.0));
  const auto t4 = tail_estimate(100, 0.75, 4, 1000);
  CHECK_FALSE(t4.has_exponent);
  const auto t5 = tail_estimate(100, 0.75, 5, 1000);
  CHECK(t5.has_exponent);
  CHECK(t5.exponent == doctest::Approx(std::log(5e-3) / 10.0));
  CHECK(t5.exponent_ci.lo <= t5.exponent);
  CHECK(t5.exponent <= t5.exponent_ci.hi);
}

TEST_CASE("stochastic exponential is exact for gaussian linear AR") {
  const auto model = ar(0.5);
  const auto U = closed_U(model);
  const Mat B = U.closed_form_B();
  for (double lam : {0.1, 1.0, 5.0}) {
    for (std::size_t n : {100u, 1000u, 10000u}) {
      for (double alpha : {0.6, 0.75, 0.9}) {
        const auto r = stochastic_exponential(U, B, vec_of({lam}), alpha, n, 3);
        CAPTURE(lam);
        CAPTURE(n);
        CAPTURE(alpha);
        CHECK(r.mode == LaplaceMode::closed_form);
        CHECK(r.target == doctest::Approx(2.0 * lam * lam).epsilon(1e-14));
        // Gaussian MGF: each of the n steps contributes (2 lam / n^alpha)^2 / 2.
        const double oracle_log = static_cast<double>(n) * 0.5 * std::pow(2.0 * lam / std::pow(n, alpha), 2);
        CHECK(r.log_E[0] == doctest::Approx(oracle_log).epsilon(1e-12));
        CHECK(std::abs(r.normalized[0] - 2.0 * lam * lam) <= 1e-10 * 2.0 * lam * lam);
      }
    }
  }
  const auto z = stochastic_exponential(U, B, vec_of({0.0}), 0.75, 100, 3);
  CHECK(z.log_E[0] == 0.0);
  CHECK(z.gap_max == 0.0);
}

TEST_CASE("stochastic exponential with two-point increments") {
  const double c = 0.7;
  const auto model = ar(0.0, NoiseSpec::rademacher(c));
  const auto U = closed_U(model);
  const std::size_t n = 400;
  const double alpha = 0.75;
  for (double lam : {0.5, 3.0}) {
    const auto r = stochastic_exponential(U, U.closed_form_B(), vec_of({lam}), alpha, n, 0);
    const double oracle_log = static_cast<double>(n) * std::log(std::cosh(c * lam / std::pow(n, alpha)));
    CHECK(r.log_E[0] == doctest::Approx(oracle_log).epsilon(1e-12));
    CHECK(std::isfinite(r.normalized[0]));
  }
}

TEST_CASE("inner Monte Carlo transform: bias correction and warnings") {
  // Linear AR forced through the Monte Carlo branch with the exact U = 2x.
  const auto model = ar(0.5);
  const auto obs = center(ObservableSpec::identity(1), model, 0);
  const auto U = cheap_mc_U(model, obs);
  StochasticExponentialOptions o;
  o.trajectories = 64;
  o.M_inner = 8;
  o.U_override = [](const Vec& x) { return Vec(2.0 * x); };
  const Mat B = Mat::Constant(1, 1, 4.0);

  const auto corrected = stochastic_exponential(U, B, vec_of({1.0}), 0.75, 100, 5, o);
  o.bias_correction = false;
  const auto raw = stochastic_exponential(U, B, vec_of({1.0}), 0.75, 100, 5, o);
  CHECK(corrected.mode == LaplaceMode::inner_mc);
  CHECK(corrected.bias_corrected);
  CHECK_FALSE(corrected.warning.empty());

  auto mean = [](const std::vector<double>& v) { return kernels::mean_se(v); };
  const auto mc = mean(corrected.normalized);
  const auto mr = mean(raw.normalized);
  // Half the biased sample variance: E = (M-1)/M of the target.
  CHECK(std::abs(mc.mean - 2.0) <= 4.0 * mc.se);
  CHECK(mr.mean == doctest::Approx(2.0 * 7.0 / 8.0).epsilon(4.0 * mr.se / 1.75));
  CHECK(mr.mean < 2.0 - 0.15);

  o.bias_correction = true;
  o.M_inner = 512;
  o.trajectories = 8;
  const auto big = stochastic_exponential(U, B, vec_of({1.0}), 0.75, 100, 6, o);
  CHECK(big.warning.empty());
  CHECK(big.inner_se < 0.05);
  CHECK(kernels::mean_se(big.normalized).mean == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("Puhalskii check: exact identity and gap decay on tanh") {
  SUBCASE("closed form") {
    const auto model = ar(0.5);
    const auto U = closed_U(model);
    auto cfg = config({100, 1000, 10000}, 4);
    cfg.lambda = vec_of({1.5});
    const auto rep = puhalskii_condition_check(cfg, U, poisson::closed_form_covariance(model, U.observable()));
    CHECK(rep.exact_identity);
    for (const auto& r : rep.per_n) CHECK(r.gap_max <= 1e-10 * r.target);
  }
  SUBCASE("tanh chain with a tabulated U") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
    const auto obs = ObservableSpec::tanh(1).with_centering(Vec::Zero(1), 0.0, true);
    poisson::PoissonOptions po;
    po.N = 40;
    po.M = 400;
    po.seed = 2;
    po.use_closed_form = false;
    const poisson::PoissonSolution U(model, obs, po);
    const auto Ut = tabulate_scalar([&U](const Vec& x) { return U(x); }, -8.0, 8.0, 161);

    // B = E_mu Var U(f(x, xi)) with the same tabulated U.
    const auto xs = chains::stationary_sample(chains::StationarySampler::for_model(model, Vec::Zero(1)), 4000, 11);
    double Bsum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      chains::NoiseDraw d(model.noise(), {12, i});
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < 200; ++k) {
        const double u = Ut(model.step(xs[i], d.next()))(0);
        s1 += u;
        s2 += u * u;
      }
      Bsum += (s2 - s1 * s1 / 200.0) / 199.0;
    }
    poisson::CovarianceEstimate B;
    B.B_hat = Mat::Constant(1, 1, Bsum / static_cast<double>(xs.size()));

    auto cfg = config({25, 200, 1600}, 12, 4);
    cfg.lambda = vec_of({1.0});
    StochasticExponentialOptions o;
    o.M_inner = 64;
    o.U_override = Ut;
    const auto rep = puhalskii_condition_check(cfg, U, B, o);
    for (const auto& r : rep.per_n) {
      CAPTURE(r.n);
      CAPTURE(r.gap_median);
      CHECK(r.mode == LaplaceMode::inner_mc);
    }
    CHECK_FALSE(rep.exact_identity);
    CHECK(rep.median_gap_decreasing);
    CHECK(rep.per_n.back().gap_median < 0.05 * rep.per_n.back().target + 3.0 * rep.per_n.back().inner_se);
  }
}

TEST_CASE("tabulated interpolant") {
  const auto f = tabulate_scalar([](const Vec& x) { return Vec(3.0 * x); }, -1.0, 1.0, 5);
  CHECK(f(vec_of({0.3}))(0) == doctest::Approx(0.9));
  CHECK(f(vec_of({4.0}))(0) == doctest::Approx(12.0));  // linear extrapolation
  CHECK_THROWS_AS(tabulate_scalar([](const Vec& x) { return Vec(x); }, 1.0, 1.0, 5), ContractViolation);
}

TEST_CASE("Dembo averages") {
  SUBCASE("constant B(x) gives h = 0") {
    const auto model = ar(0.5);
    const auto U = closed_U(model);
    const auto Bx = conditional_covariance_evaluator(U, 16, 0);
    auto cfg = config({10, 100}, 200);
    cfg.epsilon = 1e-12;
    const auto rep = dembo_average_check(cfg, model, Bx, U.closed_form_B());
    CHECK(rep.identically_zero);
    for (const auto& t : rep.tails) {
      CHECK(t.count == 0);
      CHECK(t.rule_of_three == doctest::Approx(3.0 / 200.0));
    }
    const auto h = dembo_observable(Bx, U.closed_form_B(), vec_of({1.0}), 1, 0.0);
    CHECK(h(vec_of({3.0}))(0) == 0.0);
  }
  SUBCASE("tanh chain") {
    const auto model = ChainModel::scaled_tanh(0.8, 1, NoiseSpec::gaussian(0.5));
    // B(x) is smooth here; a synthetic profile keeps the test fast while
    // exercising the averaging machinery.
    const BOfX Bx = [](const Vec& x) { return Mat::Constant(1, 1, 1.0 + std::tanh(x(0)) * std::tanh(x(0))); };
    auto cfg = config({10, 40, 160}, 4000, 8);
    cfg.epsilon = 10.0;
    const Mat B = Mat::Constant(1, 1, 1.0);
    const auto big = dembo_average_check(cfg, model, Bx, B, true, 20000);
    for (const auto& t : big.tails) {
      CHECK(t.count == 0);
      CHECK(t.exponent_ci.hi == doctest::Approx(std::log(3.0 / 4000.0) / speed(0.75, t.n)));
    }
    CHECK(std::abs(big.h_centering) > 0.0);
    cfg.epsilon = 0.12;
    const auto mid = dembo_average_check(cfg, model, Bx, B, true, 20000);
    CAPTURE(mid.tails[0].p_hat);
    CAPTURE(mid.tails[1].p_hat);
    CAPTURE(mid.tails[2].p_hat);
    CHECK(mid.tails[0].p_hat > mid.tails[1].p_hat);
    CHECK(mid.tails[1].p_hat > mid.tails[2].p_hat);
    CHECK(mid.exponent_decreasing);
    CHECK(exponents_nonincreasing(mid.tails));
    CHECK(mid.mean_abs_avg[2] < mid.mean_abs_avg[0]);
  }
}

TEST_CASE("tail probability of S_n") {
  const auto model = ar(0.0);
  const auto obs = ObservableSpec::identity(1);
  SUBCASE("ball covering the bulk") {
    const auto t = tail_probability(config({10, 50}, 500), model, obs, vec_of({0.0}), 1e6);
    for (const auto& e : t) {
      CHECK(e.p_hat == 1.0);
      CHECK(e.exponent == 0.0);
    }
  }
  SUBCASE("i.i.d. gaussian half-space against the normal tail") {
    const double y = 1.0;
    auto cfg = config({100}, 200000, 21);
    const auto t = tail_probability(cfg, model, obs, vec_of({y}), 0.0, TailShape::half_space);
    // sum of n i.i.d. N(0,1) exceeds y n^alpha
    const double tt = y * std::pow(100.0, 0.25);
    const double p = oracle::normal_sf(tt);
    CHECK(t[0].has_exponent);
    CHECK(std::abs(t[0].p_hat - p) <= 4.0 * std::sqrt(p * (1 - p) / 200000.0));
    CHECK(t[0].exponent == doctest::Approx(log_phibar(tt) / 10.0).epsilon(0.05));
    // At t >= 4 the exact exponent is within 30% of -y^2/2.
    const double y2 = 1.3;
    const double exact = log_phibar(y2 * std::pow(100.0, 0.25)) / 10.0;
    CHECK(std::abs(exact + 0.5 * y2 * y2) <= 0.3 * 0.5 * y2 * y2);
  }
  SUBCASE("doubling M keeps intervals overlapping") {
    auto cfg = config({40}, 20000, 3);
    const auto a = tail_probability(cfg, model, obs, vec_of({0.8}), 0.0, TailShape::half_space);
    cfg.M = 40000;
    const auto b = tail_probability(cfg, model, obs, vec_of({0.8}), 0.0, TailShape::half_space);
    CHECK(a[0].ci.lo <= b[0].ci.hi);
    CHECK(b[0].ci.lo <= a[0].ci.hi);
  }
  SUBCASE("backends agree bitwise") {
    auto cfg = config({10, 30}, 3000, 9);
    const auto s = tail_probability(cfg, ar(0.5), obs, vec_of({0.5}), 0.3, TailShape::ball, kernels::kSerial);
    const auto p = tail_probability(cfg, ar(0.5), obs, vec_of({0.5}), 0.3, TailShape::ball);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].count == p[i].count);
  }
}

TEST_CASE("negligibility") {
  SUBCASE("gaussian AR: no exceedances far in the tail") {
    auto cfg = config({1000}, 10000, 5);
    cfg.epsilon = 1.0;
    const auto rep = negligibility_check(cfg, ar(0.5), Quantity::state);
    CHECK(rep.rows[0].tail.count == 0);
    CHECK(rep.rows[0].tail.rule_of_three == doctest::Approx(3e-4));
    CHECK(rep.rows[0].has_chernoff);
    // log E e^{delta|xi|} - delta (1 - rho) n^alpha over the speed, delta = 1/2
    const double logE = std::log(oracle::gaussian_exp_abs(1.0, 0.5));
    CHECK(rep.rows[0].chernoff_exponent ==
          doctest::Approx((logE - 0.25 * std::pow(1000.0, 0.75)) / std::pow(1000.0, 0.5)).epsilon(1e-12));
    CHECK_FALSE(rep.rows[0].has_deterministic);
  }
  SUBCASE("bounded noise: deterministic bound") {
    const auto model = ChainModel::scaled_tanh(0.5, 1, NoiseSpec::uniform(1.0));
    auto cfg = config({10, 100, 1000}, 2000, 6);
    cfg.x0 = vec_of({3.0});
    cfg.epsilon = 0.2;
    const auto rep = negligibility_check(cfg, model, Quantity::state);
    for (const auto& r : rep.rows) {
      CHECK(r.has_deterministic);
      // |x0| + (|f(0,0)| + ell max|xi|) / (1 - rho) = 3 + 1 / 0.5
      CHECK(r.deterministic_bound <= 5.0 + 1e-12);
      CHECK(r.bound_respected);
      if (r.threshold >= 5.0) CHECK(r.tail.count == 0);
    }
    cfg.epsilon = 1e-9;
    const auto all = negligibility_check(cfg, model, Quantity::state);
    for (const auto& r : all.rows) CHECK(r.tail.count == cfg.M);
  }
  SUBCASE("U and corrector through the closed form") {
    const auto model = ar(0.5);
    const auto U = closed_U(model);
    auto cfg = config({100, 1000}, 2000, 7);
    cfg.x0 = vec_of({1.0});
    const auto u = negligibility_check(cfg, model, Quantity::U_of_state, &U);
    const auto c = negligibility_check(cfg, model, Quantity::corrector, &U);
    CHECK(u.rows[1].tail.count == 0);
    CHECK(c.rows[1].tail.count == 0);
    CHECK(c.rows[1].has_chernoff);
    CHECK_THROWS_AS(negligibility_check(cfg, model, Quantity::corrector), ContractViolation);
  }
}

TEST_CASE("geometric noise sums") {
  const std::vector<std::size_t> grid{4, 16};
  SUBCASE("zero noise") {
    const auto rep = geometric_noise_tail_check(0.5, NoiseSpec::gaussian(0.0), 1.0, 0.75, 0.1, grid, 100, 1);
    for (const auto& r : rep.rows) CHECK(r.tail.count == 0);
  }
  SUBCASE("two-point noise is a deterministic step") {
    const double c = 1.0, rho = 0.5;
    const std::size_t n = 16;
    const double S = c * (1.0 - std::pow(rho, 16.0)) / (1.0 - rho);
    const double na = std::pow(16.0, 0.75);
    const auto below = geometric_noise_tail_check(rho, NoiseSpec::rademacher(c), 1.0, 0.75, S / na * 0.999, {n}, 50, 2);
    const auto above = geometric_noise_tail_check(rho, NoiseSpec::rademacher(c), 1.0, 0.75, S / na * 1.001, {n}, 50, 2);
    CHECK(below.rows[0].tail.count == 50);
    CHECK(above.rows[0].tail.count == 0);
    CHECK(below.pass);
  }
  SUBCASE("display exponent at n = 10^4") {
    const auto rep = geometric_noise_tail_check(0.5, NoiseSpec::gaussian(1.0), 1.0, 0.75, 1.0, {10000}, 1, 3);
    const double logE = std::log(oracle::gaussian_exp_abs(1.0, 1.0));
    CHECK(rep.log_moment == doctest::Approx(logE).epsilon(1e-12));
    CHECK(rep.rows[0].display_exponent == doctest::Approx(-10.0 + logE / 100.0).epsilon(1e-12));
    CHECK(rep.rows[0].bound_exponent == doctest::Approx((logE - 0.5 * 1000.0) / 100.0).epsilon(1e-12));
    CHECK(rep.rows[0].literal_exponent < rep.rows[0].display_exponent);
  }
  SUBCASE("empirical below the Chernoff bound") {
    const auto rep = geometric_noise_tail_check(0.5, NoiseSpec::gaussian(1.0), 1.0, 0.75, 1.0, grid, 20000, 4);
    CHECK(rep.rows[0].tail.count > 0);
    CHECK(rep.pass);
  }
}

TEST_CASE("K certificate") {
  const auto r = certify_K({IncrementKind::rademacher, 1.0, 0.0}, 0.5);
  CHECK(r.K == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
  CHECK(r.delta == 0.5);

  for (double s : {0.5, 1.0, 2.0}) {
    for (double t : {0.0, 0.3, 1.0}) {
      auto f = [&](double z) {
        const double a = std::abs(z);
        return a * a * a * std::exp(t * a) * std::exp(-0.5 * z * z / (s * s));
      };
      const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -40 * s, 40 * s, 15, 1e-14) /
                       (s * std::sqrt(2.0 * oracle::kPi));
      CAPTURE(s);
      CAPTURE(t);
      CHECK(gaussian_abs_cubed_exp(s, t) == doctest::Approx(q).epsilon(1e-10));
    }
  }
  const auto lap = certify_K({IncrementKind::laplace, 0.5, 0.0}, 0.5);
  auto fl = [&](double z) { return z * z * z * std::exp(0.5 * z) * std::exp(-z / 0.5) / 0.5; };
  const double ql = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fl, 0.0, 200.0, 15, 1e-14);
  CHECK(lap.exp_third == doctest::Approx(ql).epsilon(1e-10));
  CHECK(lap.second_moment == doctest::Approx(0.5));
  CHECK_THROWS_AS(certify_K({IncrementKind::laplace, 1.0, 0.0}, 1.0), ContractViolation);
}

TEST_CASE("martingale envelope") {
  const std::vector<std::size_t> grid{100, 400, 1600};
  SUBCASE("fair signs against the binomial tail") {
    const auto rep = martingale_tail_bound_check({IncrementKind::rademacher, 1.0, 0.0}, 0.75, 0.5, grid, 0, 1);
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      const double n = static_cast<double>(row.n);
      const double sp = std::pow(n, 0.5);
      const auto k = static_cast<unsigned>(0.75 * n) + 1;
      const double p = oracle::binomial_half_upper(static_cast<unsigned>(row.n), k);
      CAPTURE(row.n);
      CHECK(row.exact_one_sided == doctest::Approx(std::log(p) / sp).epsilon(1e-8));
      CHECK(row.envelope == doctest::Approx(-0.25 * std::pow(n, 0.5) * (0.5 - 0.5 / 6.0) / std::exp(0.5)));
      CHECK(row.exact_one_sided <= row.envelope);
      CHECK(row.exact_two_sided <= row.envelope_two_sided);
    }
  }
  SUBCASE("eps above the increment size") {
    const auto rep = martingale_tail_bound_check({IncrementKind::rademacher, 1.0, 0.0}, 0.75, 1.5, {50}, 500, 2);
    CHECK(rep.rows[0].exact_one_sided == -std::numeric_limits<double>::infinity());
    CHECK(rep.rows[0].mc.count == 0);
  }
  SUBCASE("gaussian increments") {
    const auto rep = martingale_tail_bound_check({IncrementKind::gaussian, 1.0, 0.0}, 0.75, 0.5, grid, 0, 3);
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      const double n = static_cast<double>(row.n);
      CHECK(row.exact_two_sided ==
            doctest::Approx(std::log(2.0 * oracle::normal_sf(std::sqrt(n) * 0.5)) / std::sqrt(n)).epsilon(1e-10));
    }
  }
  SUBCASE("Monte Carlo agrees with the exact tail") {
    const auto rep = martingale_tail_bound_check({IncrementKind::rademacher, 1.0, 0.0}, 0.75, 0.5, {16}, 20000, 4);
    const double p = 2.0 * oracle::binomial_half_upper(16, 13);
    CHECK(std::abs(rep.rows[0].mc.p_hat - p) <= 4.0 * std::sqrt(p * (1 - p) / 20000.0));
    CHECK(rep.pass);
  }
  SUBCASE("laplace increments: Monte Carlo only") {
    const auto rep = martingale_tail_bound_check({IncrementKind::laplace, 0.5, 0.0}, 0.75, 0.5, {16, 64}, 5000, 5);
    CHECK_FALSE(rep.rows[0].has_exact);
    CHECK(rep.pass);
  }
  SUBCASE("eps >= 3 is rejected") {
    CHECK_THROWS_AS(martingale_tail_bound_check({}, 0.75, 3.0, grid, 0, 1), ContractViolation);
    CHECK_THROWS_AS(martingale_tail_bound_check({}, 0.75, 0.0, grid, 0, 1), ContractViolation);
  }
}

TEST_CASE("Gaussian perturbation bound") {
  const std::vector<std::size_t> grid{10, 100, 1000, 10000};
  const auto r = gaussian_perturbation_tail(0.01, 1.0, 0.75, grid);
  CHECK(r.rows[0].bound == doctest::Approx(-50.0));
  double prev_bound = 0.0;
  for (double beta : {1.0, 0.1, 0.01}) {
    for (double eta : {0.5, 1.0}) {
      const auto rep = gaussian_perturbation_tail(beta, eta, 0.75, grid);
      CHECK(rep.pass);
      for (const auto& row : rep.rows) {
        const double t = std::pow(static_cast<double>(row.n), 0.25) * eta / std::sqrt(beta);
        if (oracle::normal_sf(t) > 1e-300) {
          CHECK(row.exact_one_sided ==
                doctest::Approx(log_phibar(t) / std::sqrt(static_cast<double>(row.n))).epsilon(1e-10));
        }
        CHECK(row.exact_one_sided <= row.bound);
      }
    }
    const double b = gaussian_perturbation_tail(beta, 1.0, 0.75, grid).rows[0].bound;
    CHECK(b < prev_bound);
    prev_bound = b;
  }
  const auto z = gaussian_perturbation_tail(0.1, 0.0, 0.75, grid);
  CHECK(z.rows[0].exact_one_sided == doctest::Approx(std::log(0.5) / std::sqrt(10.0)));
  CHECK(std::abs(z.rows.back().exact_one_sided) < std::abs(z.rows[0].exact_one_sided));
  CHECK(z.pass);
  CHECK_THROWS_AS(gaussian_perturbation_tail(0.0, 1.0, 0.75, grid), ContractViolation);
}

TEST_CASE("exotic chain experiment") {
  auto cfg = config({50, 100}, 20000, 13);
  cfg.y_grid = {0.5};
  const auto rep = exotic_mdp_experiment(cfg, 2.0, NoiseSpec::gaussian(1.0));
  CHECK(rep.rows[0].target_rate == doctest::Approx(0.5));
  CHECK(rep.decomposition_pass);
  CHECK(rep.max_decomposition_residual <= 1e-12);
  CHECK(rep.lyapunov_pass);
  CHECK(rep.lyapunov_mean.size() == 101);
  CHECK(rep.threshold < 2.0);
  for (const auto& row : rep.rows) {
    const double sp = std::sqrt(static_cast<double>(row.n));
    CHECK(row.iid_one_sided ==
          doctest::Approx(log_phibar(2.0 * 0.5 * std::pow(static_cast<double>(row.n), 0.25)) / sp).epsilon(1e-10));
    CHECK(row.tail.count > 0);
  }

  const auto serial = exotic_mdp_experiment(cfg, 2.0, NoiseSpec::gaussian(1.0), kernels::kSerial);
  CHECK(serial.rows[1].tail.count == rep.rows[1].tail.count);
  CHECK(serial.lyapunov_mean.back() == rep.lyapunov_mean.back());

  CHECK_THROWS_AS(exotic_mdp_experiment(cfg, 0.05, NoiseSpec::gaussian(1.0)), AdmissibilityError);
  NoiseSpec shifted = NoiseSpec::gaussian(1.0);
  shifted.location = 0.3;
  CHECK_THROWS_AS(exotic_mdp_experiment(cfg, 2.0, shifted), ContractViolation);
}
