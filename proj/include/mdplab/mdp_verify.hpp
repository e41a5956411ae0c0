#pragma once
// Empirical checks of the conditions and exponential bounds behind the
// moderate deviation principle for S_n = n^{-alpha} sum_{i<=n} H(X_{i-1}).
//
// Every probability is normalized by the speed n^{2 alpha - 1}. Monte Carlo
// probabilities with fewer than five exceedances are reported as intervals
// only; with none, the rule-of-three bound 3/M stands in for p.

#include "mdplab/chains.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/noise.hpp"
#include "mdplab/observable.hpp"
#include "mdplab/poisson.hpp"
#include "mdplab/stats.hpp"
#include "mdplab/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mdplab::verify {

struct ExperimentConfig {
  double alpha = 0.75;
  Vec lambda;  ///< probe direction for stochastic exponentials
  double epsilon = 1.0;
  double eta = 1.0;
  double beta = 0.0;
  std::vector<std::size_t> n_grid;
  std::size_t M = 1000;
  std::vector<double> y_grid;
  std::uint64_t seed = 0;
  std::optional<Vec> x0;  ///< start state; unset means a stationary draw

  /// Throws ContractViolation naming the offending field.
  void validate() const;
};

/// n^{2 alpha - 1}.
double speed(double alpha, std::size_t n);

struct TailEstimate {
  std::size_t n = 0;
  std::size_t M = 0;
  std::size_t count = 0;
  double p_hat = 0.0;
  stats::Interval ci;            ///< 95% Wilson interval on p
  bool has_exponent = false;     ///< count >= 5
  double exponent = 0.0;         ///< log(p_hat) / speed, valid only with has_exponent
  stats::Interval exponent_ci;   ///< log of the p interval over the speed (lo may be -inf)
  bool zero_count = false;
  double rule_of_three = 0.0;
};

TailEstimate tail_estimate(std::size_t n, double alpha, std::size_t count, std::size_t M);

// ---------------------------------------------------------------------------
// Stochastic exponential

enum class LaplaceMode { closed_form, inner_mc };
std::string to_string(LaplaceMode m);

struct StochasticExponentialOptions {
  std::size_t trajectories = 16;
  std::size_t M_inner = 256;  ///< one-step draws per conditional transform (inner_mc)
  /// Cheaper stand-in for U in inner_mc mode (e.g. tabulate_scalar of the solution).
  std::function<Vec(const Vec&)> U_override;
  bool bias_correction = true;  ///< second-order correction of the log-mean-exp estimate
  double warn_relative_se = 0.1;
  kernels::Exec exec;
};

struct StochasticExponentialResult {
  std::size_t n = 0;
  double alpha = 0.0;
  Vec lambda;
  LaplaceMode mode = LaplaceMode::closed_form;
  std::vector<double> log_E;       ///< log E_n(lambda) per trajectory
  std::vector<double> normalized;  ///< speed * log E_n(lambda)
  double target = 0.0;             ///< 1/2 <lambda, B lambda>
  std::vector<double> gaps;        ///< |normalized - target|
  double gap_mean = 0.0;
  double gap_median = 0.0;
  double gap_max = 0.0;
  double inner_se = 0.0;           ///< largest per-trajectory SE of `normalized` from the inner draws
  bool bias_corrected = false;
  std::string warning;             ///< non-empty when the inner sample is too small to trust
};

/// log E_n(lambda) = sum_i log E[exp <lambda, zeta_i / n^alpha> | X_{i-1}] along
/// `opts.trajectories` stationary-start paths. Closed form when U is (linear AR,
/// linear H): zeta_i = G (xi_i - E xi), whose transform is the noise MGF.
/// Otherwise each transform is a log-mean-exp over M_inner one-step draws.
StochasticExponentialResult stochastic_exponential(const poisson::PoissonSolution& U, const Mat& B,
                                                   const Vec& lambda, double alpha, std::size_t n,
                                                   std::uint64_t seed,
                                                   const StochasticExponentialOptions& opts = {});

struct PuhalskiiReport {
  std::vector<StochasticExponentialResult> per_n;
  bool median_gap_decreasing = true;
  bool exact_identity = false;  ///< closed form: every gap below 1e-10 relative
};

PuhalskiiReport puhalskii_condition_check(const ExperimentConfig& cfg, const poisson::PoissonSolution& U,
                                          const poisson::CovarianceEstimate& B,
                                          StochasticExponentialOptions opts = {});

/// Piecewise-linear interpolant of a scalar-state function on [lo, hi], with
/// linear extrapolation from the end segments.
std::function<Vec(const Vec&)> tabulate_scalar(const std::function<Vec(const Vec&)>& f, double lo, double hi,
                                               std::size_t points);
std::function<Mat(const Vec&)> tabulate_scalar_matrix(const std::function<Mat(const Vec&)>& f, double lo, double hi,
                                               std::size_t points);

// ---------------------------------------------------------------------------
// Dembo-type averages

using BOfX = std::function<Mat(const Vec&)>;

/// B(x) from `M_inner` one-step draws on a fixed stream (common random numbers
/// across x), or exact when U is in closed form.
BOfX conditional_covariance_evaluator(const poisson::PoissonSolution& U, std::size_t M_inner, std::uint64_t seed);

/// h(x) = <lambda, [B(x) - B] lambda> as an observable, ready for a second
/// Poisson equation through solve_U / PoissonSolution. The Lipschitz constant
/// of h is not derivable from B(x) alone and is supplied by the caller.
ObservableSpec dembo_observable(BOfX B_of_x, const Mat& B, const Vec& lambda, int in_dim,
                                double lipschitz_K);

struct DemboReport {
  std::vector<TailEstimate> tails;   ///< P(|(1/n) sum h(X_{i-1})| > epsilon) per n
  std::vector<double> mean_abs_avg;  ///< E|(1/n) sum h| per n
  std::vector<double> mean_abs_avg_se;
  double h_centering = 0.0;          ///< subtracted stationary mean of h (0 unless recentred)
  bool identically_zero = false;     ///< h vanished on every visited state
  bool exponent_decreasing = true;   ///< over the grid points that carry an exponent
};

DemboReport dembo_average_check(const ExperimentConfig& cfg, const chains::ChainModel& model, const BOfX& B_of_x,
                                const Mat& B, bool recenter = false, std::size_t centering_count = 20000,
                                kernels::Exec exec = {});

// ---------------------------------------------------------------------------
// Tail probabilities of S_n

enum class TailShape { ball, half_space };

/// ball:       P(|S_n - y|_1 <= eps)
/// half_space: P(<S_n - y, y> >= 0), i.e. S_n >= y for scalar y > 0
std::vector<TailEstimate> tail_probability(const ExperimentConfig& cfg, const chains::ChainModel& model,
                                           const ObservableSpec& obs, const Vec& y, double eps,
                                           TailShape shape = TailShape::ball, kernels::Exec exec = {});

/// Normalized exponents nonincreasing in n beyond the first grid point,
/// allowing overlap of the exponent intervals.
bool exponents_nonincreasing(const std::vector<TailEstimate>& tails);

// ---------------------------------------------------------------------------
// Negligibility

enum class Quantity { state, U_of_state, corrector };
std::string to_string(Quantity q);

struct NegligibilityRow {
  TailEstimate tail;           ///< P(|q_n| > eps n^alpha)
  double threshold = 0.0;      ///< eps n^alpha
  bool has_chernoff = false;
  double chernoff_exponent = 0.0;  ///< normalized log of the analytic bound
  bool has_deterministic = false;
  double deterministic_bound = 0.0;  ///< sup |q_n| for bounded noise
  bool bound_respected = true;       ///< no exceedance where the deterministic bound forbids one
};

struct NegligibilityReport {
  Quantity quantity = Quantity::state;
  double chernoff_delta = 0.0;
  std::vector<NegligibilityRow> rows;
};

/// |X_n| <= K_c rho^n |x0| + |f(0,0)|/(1-rho) + K_c ell sum_j rho^j |xi_{n-j}|; the
/// last sum obeys P(. >= t) <= E e^{delta|xi|} e^{-delta (1-rho) t / (K_c ell)}.
/// U and the corrector inherit the bound through the Lipschitz constant of U.
NegligibilityReport negligibility_check(const ExperimentConfig& cfg, const chains::ChainModel& model, Quantity q,
                                        const poisson::PoissonSolution* U = nullptr, kernels::Exec exec = {});

// ---------------------------------------------------------------------------
// Geometric noise sums

struct GeometricTailRow {
  TailEstimate tail;             ///< P(sum_{j<n} rho^j |xi_{n-j}| >= eps n^alpha)
  double threshold = 0.0;
  double bound_exponent = 0.0;   ///< gamma = delta (1-rho): valid Chernoff bound
  double display_exponent = 0.0; ///< gamma = delta: -n^{1-alpha} delta eps + log E / speed
  double literal_exponent = 0.0; ///< gamma = delta / (1-rho)
  bool pass = true;              ///< empirical interval lower end below the valid bound
  bool display_respected = true;
  bool literal_respected = true;
};

struct GeometricTailReport {
  double log_moment = 0.0;  ///< log E e^{delta |xi|}
  std::vector<GeometricTailRow> rows;
  bool pass = true;
};

GeometricTailReport geometric_noise_tail_check(double rho, const NoiseSpec& noise, double delta, double alpha,
                                               double eps, const std::vector<std::size_t>& n_grid, std::size_t M,
                                               std::uint64_t seed, kernels::Exec exec = {});

// ---------------------------------------------------------------------------
// Martingale tail envelope

enum class IncrementKind { rademacher, gaussian, laplace };
std::string to_string(IncrementKind k);

/// i.i.d. centred increments: +/- c, N(0, c^2), or Laplace with scale c.
struct IncrementSpec {
  IncrementKind kind = IncrementKind::rademacher;
  double scale = 1.0;
  double delta = 0.0;  ///< exponential parameter of the certificate; raised to eps when smaller
};

struct KCertificate {
  double delta = 0.0;
  double second_moment = 0.0;  ///< E zeta^2
  double exp_third = 0.0;      ///< E |zeta|^3 e^{delta |zeta|}
  double K = 0.0;              ///< max(1, both moments)
};

/// Throws ContractViolation when the exponential moment is infinite.
KCertificate certify_K(const IncrementSpec& inc, double eps);

/// E |Z|^3 e^{t|Z|} for Z ~ N(0, s^2).
double gaussian_abs_cubed_exp(double s, double t);

struct MartingaleTailRow {
  std::size_t n = 0;
  bool has_exact = false;
  double exact_one_sided = 0.0;  ///< log P(M_n > n eps) / speed
  double exact_two_sided = 0.0;  ///< log P(|M_n| > n eps) / speed
  double envelope = 0.0;         ///< -eps^2 n^{2(1-alpha)} (1/2 - eps/6) / K
  double envelope_two_sided = 0.0;  ///< envelope + log 2 / speed
  TailEstimate mc;               ///< empirical P(|M_n| > n eps)
  bool pass = true;
};

struct MartingaleTailReport {
  IncrementSpec increments;
  KCertificate certificate;
  double alpha = 0.0;
  double eps = 0.0;
  std::vector<MartingaleTailRow> rows;
  bool pass = true;
};

/// Rejects eps >= 3 (the envelope is not established there) and eps <= 0.
MartingaleTailReport martingale_tail_bound_check(const IncrementSpec& inc, double alpha, double eps,
                                                 const std::vector<std::size_t>& n_grid, std::size_t M,
                                                 std::uint64_t seed, kernels::Exec exec = {});

// ---------------------------------------------------------------------------
// Gaussian perturbation

struct PerturbationRow {
  std::size_t n = 0;
  double bound = 0.0;            ///< -eta^2 / (2 beta)
  double chernoff_lambda = 0.0;  ///< n^alpha eta / (n sqrt(beta))
  double exact_one_sided = 0.0;  ///< log Phibar(n^{alpha-1/2} eta / sqrt(beta)) / speed
  double exact_two_sided = 0.0;  ///< log 2 Phibar(.) / speed
  bool pass = true;
};

struct PerturbationReport {
  double beta = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  std::vector<PerturbationRow> rows;
  bool pass = true;
};

PerturbationReport gaussian_perturbation_tail(double beta, double eta, double alpha,
                                              const std::vector<std::size_t>& n_grid);

// ---------------------------------------------------------------------------
// Exotic chain

struct ExoticRow {
  std::size_t n = 0;
  double y = 0.0;
  double target_rate = 0.0;       ///< m^2 y^2 / (2 E xi^2)
  TailEstimate tail;              ///< P(S_n >= y)
  double relative_error = 0.0;    ///< |exponent + rate| / rate, NaN without an exponent
  double iid_one_sided = 0.0;     ///< Gaussian-sum oracle log Phibar(m y n^{alpha-1/2} / sd) / speed
  double iid_two_sided = 0.0;
  bool within_30pct = false;
};

struct ExoticReport {
  double m = 0.0;
  double delta = 0.0;             ///< admissible delta actually used
  double threshold = 0.0;         ///< (1/delta) log E e^{delta|xi|}
  double max_decomposition_residual = 0.0;
  std::vector<ExoticRow> rows;
  std::vector<double> lyapunov_mean;  ///< E e^{delta|X_k|}, k = 0..max n
  std::vector<double> lyapunov_se;
  double lyapunov_bound = 0.0;        ///< V(x0) + ell / (1 - rho)
  bool lyapunov_pass = false;
  bool decomposition_pass = false;
};

/// S_n = n^{-alpha} sum sign(X_{k-1}) from x0 (default 0), checked against
/// (x0 - X_n)/(m n^alpha) + n^{-alpha} sum xi_k / m on every path.
/// Requires zero-mean noise; inadmissible (m, delta) raises AdmissibilityError.
ExoticReport exotic_mdp_experiment(const ExperimentConfig& cfg, double m, const NoiseSpec& noise,
                                   kernels::Exec exec = {});

}  // namespace mdplab::verify
