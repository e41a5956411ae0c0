#pragma once
// Poisson equation U = H + P U for a contracting chain, solved pointwise by a
// coupled Monte Carlo series, plus the martingale decomposition and the two
// covariance routes (series and ergodic).

#include "mdplab/chains.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/observable.hpp"
#include "mdplab/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mdplab::poisson {

struct PoissonOptions {
  std::size_t N = 0;  ///< series truncation; 0 picks the smallest N meeting tail_tolerance on |x| <= radius
  double radius = 20.0;
  std::size_t M = 1000;
  double tail_tolerance = 1e-3;
  bool use_closed_form = true;
  bool antithetic = true;
  bool store_noise = true;  ///< keep the path noise in memory (capped) instead of regenerating it
  std::uint64_t seed = 0;
  kernels::Exec exec;
};

struct UEstimate {
  Vec value;
  Vec se;  ///< statistical standard error, including the centring error
  double tail_bound = 0.0;
  bool closed_form = false;

  /// Largest componentwise SE plus the deterministic tail bound.
  double combined_error() const;
};

/// E_mu |X|_1 <= this, from the contraction and the noise moments.
double stationary_abs_mean_bound(const chains::ChainModel& model);

/// Smallest N with K K_c (max(1, m_mu) + |x|) rho^{N+1} / (1 - rho) <= tol.
std::size_t truncation_for(const chains::ChainModel& model, double K, const Vec& x, double tol);

/// Pointwise solution of the Poisson equation.
///
/// The Monte Carlo estimator is
///   U(x) = H(x) + (1/M) sum_k sum_{n<=N} [H(X^x_{k,n}) - H(X^mu_{k,n})],
/// where path k drives both chains with the same noise and X^mu_{k,0} is a
/// stationary draw. The noise and the stationary sums are fixed at
/// construction (common random numbers), so x -> U(x) is a deterministic
/// function and differences U(x') - U(x'') carry little noise. Paths come in
/// antithetic pairs (reflected noise) unless disabled.
///
/// For a linear AR chain with linear H the exact U(x) = G(x - m), with
/// G = C (I - A)^{-1} and m the stationary mean, is used instead.
class PoissonSolution {
 public:
  PoissonSolution(chains::ChainModel model, ObservableSpec observable, PoissonOptions options = {});
  ~PoissonSolution();
  PoissonSolution(PoissonSolution&&) noexcept;
  PoissonSolution& operator=(PoissonSolution&&) noexcept;

  const chains::ChainModel& model() const noexcept { return model_; }
  const ObservableSpec& observable() const noexcept { return obs_; }
  const PoissonOptions& options() const noexcept { return opts_; }
  bool closed_form() const noexcept { return closed_; }
  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }
  /// Lipschitz constant of U: K K_c / (1 - rho).
  double lipschitz_U() const;

  /// Throws TruncationError when the tail bound at x exceeds the tolerance.
  UEstimate evaluate(const Vec& x) const;
  Vec operator()(const Vec& x) const { return evaluate(x).value; }
  double tail_bound(const Vec& x) const;

  /// Estimate of P_x U = E U(f(x, xi)) from M one-step draws on stream `addr`,
  /// or the exact value in closed form. `se` receives the componentwise SE.
  Vec conditional_mean(const Vec& x, std::size_t M, rng::SeedAddress addr, Vec* se = nullptr) const;

  /// Closed-form pieces (valid only when closed_form()).
  const Mat& gain() const;
  const Vec& stationary_mean() const;
  Mat closed_form_B() const;

  std::size_t cache_size() const;

 private:
  struct Impl;
  chains::ChainModel model_;
  ObservableSpec obs_;
  PoissonOptions opts_;
  bool closed_ = false;
  std::size_t N_ = 0;
  std::size_t M_ = 0;
  Mat G_;
  Vec mean_state_;
  std::unique_ptr<Impl> impl_;
};

/// Facade: one evaluation with a fresh solution object.
UEstimate solve_U(const chains::ChainModel& model, const ObservableSpec& observable, const Vec& x,
                  std::size_t N, std::size_t M, std::uint64_t seed);

struct ResidualReport {
  Vec residual;
  double combined_error = 0.0;
};

/// U(x) - (1/M) sum_k U(f(x, xi_k)) - H(x).
ResidualReport poisson_residual(const PoissonSolution& U, const Vec& x, std::size_t M, std::uint64_t seed);

struct MartingaleDecomposition {
  std::vector<Vec> U_values;      ///< U(X_0) .. U(X_n)
  std::vector<Vec> increments;    ///< zeta_1 .. zeta_n
  std::vector<Vec> corrector;     ///< U(x_0) - U(X_k), k = 0..n
  std::vector<Vec> partial_sums;  ///< M_k, k = 0..n
  std::vector<double> telescoping_residual;  ///< |sum H - (corrector + M)|_inf per k
  double max_telescoping_residual = 0.0;
  double propagated_error = 0.0;
  bool closed_form = false;
};

/// zeta_i = U(X_i) - P_{X_{i-1}} U, with P estimated from M_inner draws on
/// stream (seed, i) unless U is in closed form.
MartingaleDecomposition martingale_decompose(const PoissonSolution& U, const chains::Trajectory& traj,
                                             std::size_t M_inner = 256, std::uint64_t seed = 0);

enum class CovarianceMethod { series, ergodic, closed_form };
std::string to_string(CovarianceMethod m);

struct CovarianceEstimate {
  Mat B_hat;
  Mat se;
  CovarianceMethod method = CovarianceMethod::series;
  std::size_t n_or_N = 0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  double truncation_bound = 0.0;

  double max_se() const;
  /// Smallest eigenvalue >= -10 max SE.
  bool psd_ok() const;
};

/// B(x) = Cov U(f(x, xi)) from M draws on stream `addr`, or exact.
CovarianceEstimate conditional_covariance(const PoissonSolution& U, const Vec& x, std::size_t M,
                                          rng::SeedAddress addr);

/// B = E[H H*] + sum_{n<=N} E[H (P^n H)* + (P^n H) H*], each path contributing
/// H(x0)H(x0)* + sum_n [H(x0)(H(X^{x0}_n) - H(X^{x'}_n))* + transpose]
/// with x0, x' independent stationary draws and shared forward noise.
CovarianceEstimate asymptotic_covariance_series(const chains::ChainModel& model, const ObservableSpec& obs,
                                                std::size_t N, std::size_t M, std::uint64_t seed,
                                                double tolerance = 1e-2, kernels::Exec exec = {});

/// (1/n) sum_i B(X_{i-1}) along a stationary-start trajectory, SE by batch means.
/// B(x) is the sample covariance of M_inner one-step draws of U(f(x, xi));
/// M_inner = 0 with a closed-form U uses the exact B(x).
CovarianceEstimate asymptotic_covariance_ergodic(const PoissonSolution& U, std::size_t n, std::uint64_t seed,
                                                 std::size_t M_inner = 64, kernels::Exec exec = {});

/// Exact B for a linear AR chain and linear H: G Sigma G*.
CovarianceEstimate closed_form_covariance(const chains::ChainModel& model, const ObservableSpec& obs);

struct IncrementMomentReport {
  std::vector<double> second;      ///< E|zeta_i|^2 per step
  std::vector<double> second_se;
  std::vector<double> exp_third;   ///< E|zeta_i|^3 e^{delta|zeta_i|} per step
  std::vector<double> exp_third_se;
  double max_second = 0.0;
  double max_exp_third = 0.0;
  double mean_second = 0.0;
  double mean_second_se = 0.0;
  double mean_exp_third = 0.0;
  double mean_exp_third_se = 0.0;
  /// Same moment with delta replaced by n^{-alpha}, n the number of steps.
  double mean_exp_third_scaled = 0.0;
  /// Second half of the steps exceeds the first half by more than 3 joint SE.
  bool growth = false;
};

/// Moments across independent decompositions of equal length, per step.
IncrementMomentReport increment_moment_check(const std::vector<MartingaleDecomposition>& decomps,
                                             double alpha, double delta);

}  // namespace mdplab::poisson
