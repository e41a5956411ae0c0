#include "mdplab/poisson.hpp"

#include "mdplab/errors.hpp"
#include "mdplab/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace mdplab::poisson {

namespace {

constexpr std::size_t kMaxNoiseTable = std::size_t{1} << 23;  // doubles
constexpr std::size_t kMaxCache = std::size_t{1} << 16;

// Running Neumaier sum over vectors.
struct VecAccumulator {
  Vec sum;
  Vec comp;
  explicit VecAccumulator(int dim) : sum(Vec::Zero(dim)), comp(Vec::Zero(dim)) {}
  void add(const Vec& v) {
    for (int j = 0; j < v.size(); ++j) {
      const double t = sum(j) + v(j);
      if (std::abs(sum(j)) >= std::abs(v(j))) {
        comp(j) += (sum(j) - t) + v(j);
      } else {
        comp(j) += (v(j) - t) + sum(j);
      }
      sum(j) = t;
    }
  }
  Vec value() const { return sum + comp; }
};

std::string key_of(const Vec& x) {
  std::string k(static_cast<std::size_t>(x.size()) * sizeof(double), '\0');
  std::memcpy(k.data(), x.data(), k.size());
  return k;
}

double pow_rho(double rho, double e) { return rho <= 0.0 ? 0.0 : std::pow(rho, e); }

double rate_of(const chains::ChainModel& model) {
  const double rho = model.contraction_rate();
  if (!(rho < 1.0)) throw AdmissibilityError("contraction", "contraction rate must be below 1");
  return rho;
}

// Column-wise mean and SE of a set of vectors, reduced in index order.
void column_mean_se(const std::vector<Vec>& xs, int dim, Vec& mean, Vec& se) {
  mean = Vec::Zero(dim);
  se = Vec::Zero(dim);
  std::vector<double> col(xs.size());
  for (int j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) col[i] = xs[i](j);
    const auto ms = kernels::mean_se(col);
    mean(j) = ms.mean;
    se(j) = ms.se;
  }
}

}  // namespace

double UEstimate::combined_error() const {
  const double s = se.size() ? se.maxCoeff() : 0.0;
  return s + tail_bound;
}

double stationary_abs_mean_bound(const chains::ChainModel& model) {
  const double rho = rate_of(model);
  const double Kc = model.contraction_constant();
  const double noise_mean = abs_mean(model.noise());
  if (model.is_linear()) return Kc * noise_mean / (1.0 - rho);
  const Vec f00 = model.step_unchecked(Vec::Zero(model.dim()), Vec::Zero(model.noise_dim()));
  return (norm1(f00) + model.noise_modulus() * noise_mean) / (1.0 - rho);
}

namespace {

double tail_constant(const chains::ChainModel& model, double K, const Vec& x) {
  const double m1 = std::max(1.0, stationary_abs_mean_bound(model));
  return K * model.contraction_constant() * (m1 + norm1(x));
}

}  // namespace

std::size_t truncation_for(const chains::ChainModel& model, double K, const Vec& x, double tol) {
  if (!(tol > 0.0)) throw ContractViolation("tail tolerance must be positive");
  const double rho = rate_of(model);
  const double c = tail_constant(model, K, x);
  if (rho <= 0.0 || c <= 0.0) return 1;
  // c rho^{N+1} / (1 - rho) <= tol
  const double n1 = std::log(tol * (1.0 - rho) / c) / std::log(rho);
  const double n = std::ceil(n1 - 1.0);
  return static_cast<std::size_t>(std::max(1.0, n));
}

struct PoissonSolution::Impl {
  std::vector<double> noise;  // path-major table, empty when regenerated on the fly
  std::vector<Vec> stationary_sums;
  rng::SeedAddress noise_base;
  mutable std::shared_mutex mutex;
  mutable std::unordered_map<std::string, UEstimate> cache;
};

PoissonSolution::PoissonSolution(chains::ChainModel model, ObservableSpec observable, PoissonOptions options)
    : model_(std::move(model)), obs_(std::move(observable)), opts_(options), impl_(std::make_unique<Impl>()) {
  if (obs_.in_dim != model_.dim()) throw ContractViolation("observable input dimension differs from chain");
  if (model_.is_exotic()) throw UnsupportedVariant("Poisson solver needs a contracting chain");
  if (!std::isfinite(obs_.lipschitz_K)) throw UnsupportedVariant("Poisson solver needs a Lipschitz observable");
  const double rho = rate_of(model_);
  (void)rho;

  if (opts_.use_closed_form && model_.is_linear() && obs_.is_linear()) {
    const int d = model_.dim();
    const Mat& A = model_.linear().A;
    const Mat I = Mat::Identity(d, d);
    G_ = (I - A).transpose().partialPivLu().solve(obs_.C.transpose()).transpose();
    mean_state_ = (I - A).partialPivLu().solve(Vec::Constant(model_.noise_dim(), model_.noise().location));
    const Vec expected = obs_.C * mean_state_;
    const double gap = norm1(Vec(expected - obs_.centering));
    if (gap > 1e-9 * (1.0 + norm1(expected)) + 3.0 * obs_.centering_se) {
      throw ContractViolation("observable is not centred under the stationary law");
    }
    closed_ = true;
    N_ = 0;
    M_ = 0;
    return;
  }

  if (opts_.M < 1) throw ContractViolation("M must be >= 1");
  M_ = opts_.M;
  if (opts_.antithetic && M_ % 2 == 1) ++M_;
  N_ = opts_.N;
  if (N_ == 0) {
    Vec edge = Vec::Zero(model_.dim());
    edge(0) = opts_.radius;
    N_ = truncation_for(model_, obs_.lipschitz_K, edge, opts_.tail_tolerance);
  }

  const int p = model_.noise_dim();
  const std::uint64_t noise_master = rng::derive(opts_.seed, "poisson-noise");
  const std::uint64_t start_master = rng::derive(opts_.seed, "poisson-start");
  const bool anti = opts_.antithetic;
  const auto sampler = chains::StationarySampler::for_model(model_, Vec::Zero(model_.dim()));
  const bool table = opts_.store_noise && M_ * N_ * static_cast<std::size_t>(p) <= kMaxNoiseTable;
  if (table) impl_->noise.resize(M_ * N_ * static_cast<std::size_t>(p));
  impl_->noise_base = {noise_master, 0};

  const std::size_t N = N_;
  const auto& obs = obs_;
  const auto& mdl = model_;
  auto& noise_tab = impl_->noise;
  impl_->stationary_sums = kernels::map_indices(
      M_,
      [&](std::size_t k) {
        const std::uint64_t idx = anti ? k / 2 : k;
        const bool refl = anti && (k % 2 == 1);
        chains::NoiseDraw start(mdl.noise(), {start_master, idx}, refl);
        Vec x = chains::stationary_draw(sampler, start);
        chains::NoiseDraw fwd(mdl.noise(), {noise_master, idx}, refl);
        VecAccumulator acc(obs.out_dim);
        for (std::size_t n = 0; n < N; ++n) {
          const Vec xi = fwd.next();
          if (table) {
            std::copy(xi.data(), xi.data() + p, noise_tab.data() + (k * N + n) * static_cast<std::size_t>(p));
          }
          x = mdl.step_unchecked(x, xi);
          acc.add(obs.raw(x));
        }
        return acc.value();
      },
      opts_.exec);
}

PoissonSolution::~PoissonSolution() = default;
PoissonSolution::PoissonSolution(PoissonSolution&&) noexcept = default;
PoissonSolution& PoissonSolution::operator=(PoissonSolution&&) noexcept = default;

double PoissonSolution::lipschitz_U() const {
  return obs_.lipschitz_K * model_.contraction_constant() / (1.0 - model_.contraction_rate());
}

double PoissonSolution::tail_bound(const Vec& x) const {
  if (closed_) return 0.0;
  const double rho = model_.contraction_rate();
  return tail_constant(model_, obs_.lipschitz_K, x) * pow_rho(rho, static_cast<double>(N_ + 1)) / (1.0 - rho);
}

UEstimate PoissonSolution::evaluate(const Vec& x) const {
  if (x.size() != model_.dim()) throw ContractViolation("state dimension mismatch");
  UEstimate r;
  if (closed_) {
    r.value = G_ * (x - mean_state_);
    r.se = Vec::Zero(obs_.out_dim);
    r.closed_form = true;
    return r;
  }
  r.tail_bound = tail_bound(x);
  if (r.tail_bound > opts_.tail_tolerance) {
    const auto suggested = truncation_for(model_, obs_.lipschitz_K, x, opts_.tail_tolerance);
    throw TruncationError("series truncation N=" + std::to_string(N_) + " too short at this point: tail bound " +
                              std::to_string(r.tail_bound) + " exceeds tolerance",
                          suggested);
  }
  const std::string key = key_of(x);
  {
    std::shared_lock lock(impl_->mutex);
    const auto it = impl_->cache.find(key);
    if (it != impl_->cache.end()) return it->second;
  }

  const int p = model_.noise_dim();
  const std::size_t N = N_;
  const bool anti = opts_.antithetic;
  const bool table = !impl_->noise.empty();
  const auto diffs = kernels::map_indices(
      M_,
      [&](std::size_t k) {
        Vec y = x;
        VecAccumulator acc(obs_.out_dim);
        if (table) {
          const double* base = impl_->noise.data() + k * N * static_cast<std::size_t>(p);
          for (std::size_t n = 0; n < N; ++n) {
            const Vec xi = Eigen::Map<const Eigen::VectorXd>(base + n * static_cast<std::size_t>(p), p);
            y = model_.step_unchecked(y, xi);
            acc.add(obs_.raw(y));
          }
        } else {
          const std::uint64_t idx = anti ? k / 2 : k;
          chains::NoiseDraw fwd(model_.noise(), {impl_->noise_base.master, idx}, anti && (k % 2 == 1));
          for (std::size_t n = 0; n < N; ++n) {
            y = model_.step_unchecked(y, fwd.next());
            acc.add(obs_.raw(y));
          }
        }
        return Vec(acc.value() - impl_->stationary_sums[k]);
      },
      opts_.exec);

  Vec mean;
  Vec se;
  if (anti) {
    std::vector<Vec> pairs(M_ / 2);
    for (std::size_t j = 0; j < pairs.size(); ++j) pairs[j] = 0.5 * (diffs[2 * j] + diffs[2 * j + 1]);
    column_mean_se(pairs, obs_.out_dim, mean, se);
  } else {
    column_mean_se(diffs, obs_.out_dim, mean, se);
  }
  r.value = obs_(x) + mean;
  r.se = se.array() + obs_.centering_se;
  r.closed_form = false;

  std::unique_lock lock(impl_->mutex);
  if (impl_->cache.size() < kMaxCache) impl_->cache.emplace(key, r);
  return r;
}

Vec PoissonSolution::conditional_mean(const Vec& x, std::size_t M, rng::SeedAddress addr, Vec* se) const {
  if (closed_) {
    const Mat& A = model_.linear().A;
    const Vec mean_noise = Vec::Constant(model_.noise_dim(), model_.noise().location);
    if (se) *se = Vec::Zero(obs_.out_dim);
    return G_ * (A * x + mean_noise - mean_state_);
  }
  if (M < 1) throw ContractViolation("M must be >= 1");
  chains::NoiseDraw draw(model_.noise(), addr);
  std::vector<Vec> us(M);
  for (std::size_t k = 0; k < M; ++k) us[k] = evaluate(model_.step_unchecked(x, draw.next())).value;
  Vec mean;
  Vec s;
  column_mean_se(us, obs_.out_dim, mean, s);
  if (se) *se = s;
  return mean;
}

const Mat& PoissonSolution::gain() const {
  if (!closed_) throw UnsupportedVariant("gain is only defined for the closed form");
  return G_;
}

const Vec& PoissonSolution::stationary_mean() const {
  if (!closed_) throw UnsupportedVariant("stationary mean is only stored for the closed form");
  return mean_state_;
}

Mat PoissonSolution::closed_form_B() const {
  const double var = component_variance(model_.noise());
  return var * gain() * gain().transpose();
}

std::size_t PoissonSolution::cache_size() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->cache.size();
}

UEstimate solve_U(const chains::ChainModel& model, const ObservableSpec& observable, const Vec& x, std::size_t N,
                  std::size_t M, std::uint64_t seed) {
  if (N < 1 || M < 1) throw ContractViolation("N and M must be >= 1");
  PoissonOptions o;
  o.N = N;
  o.M = M;
  o.seed = seed;
  o.use_closed_form = false;
  return PoissonSolution(model, observable, o).evaluate(x);
}

ResidualReport poisson_residual(const PoissonSolution& U, const Vec& x, std::size_t M, std::uint64_t seed) {
  const auto ux = U.evaluate(x);
  Vec se;
  const Vec pu = U.conditional_mean(x, M, {rng::derive(seed, "poisson-residual"), 0}, &se);
  ResidualReport r;
  r.residual = ux.value - pu - U.observable()(x);
  r.combined_error = ux.combined_error() + se.maxCoeff() + ux.tail_bound;
  return r;
}

MartingaleDecomposition martingale_decompose(const PoissonSolution& U, const chains::Trajectory& traj,
                                             std::size_t M_inner, std::uint64_t seed) {
  const auto& obs = U.observable();
  const std::size_t n = traj.states.size() - 1;
  MartingaleDecomposition d;
  d.closed_form = U.closed_form();
  d.U_values.resize(n + 1);
  std::vector<double> errs(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto e = U.evaluate(traj.states[k]);
    d.U_values[k] = e.value;
    errs[k] = e.combined_error();
  }
  const std::uint64_t inner = rng::derive(seed, "martingale-inner");
  d.increments.resize(n);
  std::vector<double> pu_err(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    Vec se;
    const Vec pu = U.conditional_mean(traj.states[i - 1], M_inner, {inner, i}, &se);
    d.increments[i - 1] = d.U_values[i] - pu;
    pu_err[i - 1] = se.size() ? se.maxCoeff() : 0.0;
  }

  const int p = obs.out_dim;
  VecAccumulator m(p);
  VecAccumulator h(p);
  d.corrector.assign(n + 1, Vec::Zero(p));
  d.partial_sums.assign(n + 1, Vec::Zero(p));
  d.telescoping_residual.assign(n + 1, 0.0);
  double err = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    m.add(d.increments[k - 1]);
    h.add(obs(traj.states[k - 1]));
    d.partial_sums[k] = m.value();
    d.corrector[k] = d.U_values[0] - d.U_values[k];
    const Vec gap = h.value() - d.corrector[k] - d.partial_sums[k];
    d.telescoping_residual[k] = gap.cwiseAbs().maxCoeff();
    d.max_telescoping_residual = std::max(d.max_telescoping_residual, d.telescoping_residual[k]);
    err += errs[k - 1] + pu_err[k - 1];
  }
  d.propagated_error = d.closed_form ? 0.0 : err;
  return d;
}

std::string to_string(CovarianceMethod m) {
  switch (m) {
    case CovarianceMethod::series: return "series";
    case CovarianceMethod::ergodic: return "ergodic";
    case CovarianceMethod::closed_form: return "closed_form";
  }
  return "unknown";
}

double CovarianceEstimate::max_se() const { return se.size() ? se.maxCoeff() : 0.0; }

bool CovarianceEstimate::psd_ok() const {
  if (B_hat.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(B_hat), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -10.0 * max_se() - 1e-12 * std::max(1.0, B_hat.cwiseAbs().maxCoeff());
}

namespace {

// Entrywise mean and SE of a matrix sample, symmetrised.
void matrix_mean_se(const std::vector<Mat>& zs, int p, Mat& mean, Mat& se, bool batch) {
  mean = Mat::Zero(p, p);
  se = Mat::Zero(p, p);
  std::vector<double> col(zs.size());
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      for (std::size_t i = 0; i < zs.size(); ++i) col[i] = zs[i](a, b);
      const auto ms = batch ? kernels::batch_means(col) : kernels::mean_se(col);
      mean(a, b) = ms.mean;
      se(a, b) = ms.se;
    }
  }
  mean = 0.5 * (mean + mean.transpose()).eval();
  se = 0.5 * (se + se.transpose()).eval();
}

Mat sample_covariance(const std::vector<Vec>& us, int p) {
  const std::size_t M = us.size();
  Vec mean;
  Vec se;
  column_mean_se(us, p, mean, se);
  Mat B = Mat::Zero(p, p);
  std::vector<double> col(M);
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      for (std::size_t k = 0; k < M; ++k) col[k] = (us[k](a) - mean(a)) * (us[k](b) - mean(b));
      const double s = kernels::compensated_sum(col) / static_cast<double>(M - 1);
      B(a, b) = B(b, a) = s;
    }
  }
  return B;
}

}  // namespace

CovarianceEstimate conditional_covariance(const PoissonSolution& U, const Vec& x, std::size_t M,
                                          rng::SeedAddress addr) {
  const int p = U.observable().out_dim;
  CovarianceEstimate c;
  c.seed = addr.master;
  if (U.closed_form()) {
    c.B_hat = U.closed_form_B();
    c.se = Mat::Zero(p, p);
    c.method = CovarianceMethod::closed_form;
    return c;
  }
  if (M < 2) throw ContractViolation("conditional covariance needs M >= 2");
  chains::NoiseDraw draw(U.model().noise(), addr);
  std::vector<Vec> us(M);
  for (std::size_t k = 0; k < M; ++k) us[k] = U.evaluate(U.model().step_unchecked(x, draw.next())).value;
  c.B_hat = sample_covariance(us, p);
  // SE of a sample variance entry, from the fourth-moment estimate.
  c.se = Mat::Zero(p, p);
  Vec mean;
  Vec se;
  column_mean_se(us, p, mean, se);
  std::vector<double> col(M);
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      for (std::size_t k = 0; k < M; ++k) col[k] = (us[k](a) - mean(a)) * (us[k](b) - mean(b));
      c.se(a, b) = c.se(b, a) = kernels::mean_se(col).se;
    }
  }
  c.M = M;
  c.n_or_N = 1;
  return c;
}

namespace {

// One-step covariance of U(f(x, xi)) by Monte Carlo over xi, using whatever
// representation U has (closed-form values included).
Mat mc_one_step_covariance(const PoissonSolution& U, const Vec& x, std::size_t M, rng::SeedAddress addr) {
  chains::NoiseDraw draw(U.model().noise(), addr);
  std::vector<Vec> us(M);
  for (std::size_t k = 0; k < M; ++k) us[k] = U.evaluate(U.model().step_unchecked(x, draw.next())).value;
  return sample_covariance(us, U.observable().out_dim);
}

}  // namespace

CovarianceEstimate asymptotic_covariance_series(const chains::ChainModel& model, const ObservableSpec& obs,
                                                std::size_t N, std::size_t M, std::uint64_t seed,
                                                double tolerance, kernels::Exec exec) {
  if (N < 1 || M < 2) throw ContractViolation("series covariance needs N >= 1 and M >= 2");
  if (!std::isfinite(obs.lipschitz_K)) throw UnsupportedVariant("series covariance needs a Lipschitz observable");
  const int p = obs.out_dim;
  const auto sampler = chains::StationarySampler::for_model(model, Vec::Zero(model.dim()));
  const std::uint64_t start_master = rng::derive(seed, "series-start");
  const std::uint64_t partner_master = rng::derive(seed, "series-partner");
  const std::uint64_t noise_master = rng::derive(seed, "series-noise");

  struct PathOut {
    Mat Z;
    double weight = 0.0;  // |H(x0)| (|x0| + m)
  };
  const double m1 = std::max(1.0, stationary_abs_mean_bound(model));
  const auto outs = kernels::map_indices(
      M,
      [&](std::size_t k) {
        chains::NoiseDraw s0(model.noise(), {start_master, k});
        chains::NoiseDraw s1(model.noise(), {partner_master, k});
        chains::NoiseDraw fwd(model.noise(), {noise_master, k});
        Vec x = chains::stationary_draw(sampler, s0);
        Vec xp = chains::stationary_draw(sampler, s1);
        const Vec h0 = obs(x);
        PathOut o;
        o.weight = norm1(h0) * (norm1(x) + m1);
        VecAccumulator acc(p);
        for (std::size_t n = 0; n < N; ++n) {
          const Vec xi = fwd.next();
          x = model.step_unchecked(x, xi);
          xp = model.step_unchecked(xp, xi);
          acc.add(Vec(obs.raw(x) - obs.raw(xp)));
        }
        const Vec s = acc.value();
        o.Z = h0 * h0.transpose() + h0 * s.transpose() + s * h0.transpose();
        return o;
      },
      exec);

  std::vector<Mat> zs(M);
  std::vector<double> ws(M);
  for (std::size_t k = 0; k < M; ++k) {
    zs[k] = outs[k].Z;
    ws[k] = outs[k].weight;
  }
  CovarianceEstimate c;
  matrix_mean_se(zs, p, c.B_hat, c.se, false);
  c.method = CovarianceMethod::series;
  c.n_or_N = N;
  c.M = M;
  c.seed = seed;

  const double rho = model.contraction_rate();
  const double E = kernels::mean_se(ws).mean;
  const double coef = 2.0 * obs.lipschitz_K * model.contraction_constant() * E / (1.0 - rho);
  c.truncation_bound = coef * pow_rho(rho, static_cast<double>(N + 1));
  const double tol = tolerance * std::max(1.0, c.B_hat.cwiseAbs().maxCoeff());
  if (c.truncation_bound > tol) {
    const double need = std::ceil(std::log(tol / coef) / std::log(rho) - 1.0);
    throw TruncationError("series covariance truncation N=" + std::to_string(N) + " too short: bound " +
                              std::to_string(c.truncation_bound),
                          static_cast<std::size_t>(std::max(1.0, need)));
  }
  return c;
}

CovarianceEstimate asymptotic_covariance_ergodic(const PoissonSolution& U, std::size_t n, std::uint64_t seed,
                                                 std::size_t M_inner, kernels::Exec exec) {
  const auto& model = U.model();
  const auto sampler = chains::StationarySampler::for_model(model, Vec::Zero(model.dim()));
  if (n < sampler.burn_in) throw ContractViolation("ergodic average shorter than the burn-in");
  const bool exact = U.closed_form() && M_inner == 0;
  if (!exact && M_inner < 2) throw ContractViolation("ergodic covariance needs M_inner >= 2");
  chains::NoiseDraw start(model.noise(), {rng::derive(seed, "ergodic-start"), 0});
  const Vec x0 = chains::stationary_draw(sampler, start);
  const auto traj = chains::simulate(model, x0, n, {rng::derive(seed, "ergodic-path"), 0});
  const std::uint64_t inner = rng::derive(seed, "ergodic-inner");
  const int p = U.observable().out_dim;

  std::vector<Mat> bs;
  if (exact) {
    bs.assign(n, U.closed_form_B());
  } else {
    bs = kernels::map_indices(
        n, [&](std::size_t i) { return mc_one_step_covariance(U, traj.states[i], M_inner, {inner, i + 1}); }, exec);
  }
  CovarianceEstimate c;
  matrix_mean_se(bs, p, c.B_hat, c.se, true);
  c.method = CovarianceMethod::ergodic;
  c.n_or_N = n;
  c.M = M_inner;
  c.seed = seed;
  return c;
}

CovarianceEstimate closed_form_covariance(const chains::ChainModel& model, const ObservableSpec& obs) {
  PoissonOptions o;
  o.use_closed_form = true;
  PoissonSolution U(model, obs, o);
  if (!U.closed_form()) throw UnsupportedVariant("closed-form covariance needs a linear AR chain and linear H");
  CovarianceEstimate c;
  c.B_hat = U.closed_form_B();
  c.se = Mat::Zero(obs.out_dim, obs.out_dim);
  c.method = CovarianceMethod::closed_form;
  return c;
}

IncrementMomentReport increment_moment_check(const std::vector<MartingaleDecomposition>& decomps, double alpha,
                                             double delta) {
  if (decomps.empty()) throw ContractViolation("no decompositions supplied");
  if (!(delta >= 0.0)) throw ContractViolation("delta must be >= 0");
  const std::size_t n = decomps.front().increments.size();
  for (const auto& d : decomps) {
    if (d.increments.size() != n) throw ContractViolation("decompositions differ in length");
  }
  if (n == 0) throw ContractViolation("decompositions have no increments");
  const double delta_n = std::pow(static_cast<double>(n), -alpha);
  IncrementMomentReport r;
  r.second.resize(n);
  r.second_se.resize(n);
  r.exp_third.resize(n);
  r.exp_third_se.resize(n);
  std::vector<double> all2;
  std::vector<double> all3;
  std::vector<double> all3n;
  std::vector<double> s2(decomps.size());
  std::vector<double> s3(decomps.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < decomps.size(); ++k) {
      const double z = norm1(decomps[k].increments[i]);
      s2[k] = z * z;
      s3[k] = z * z * z * std::exp(delta * z);
      all2.push_back(s2[k]);
      all3.push_back(s3[k]);
      all3n.push_back(z * z * z * std::exp(delta_n * z));
    }
    const auto m2 = kernels::mean_se(s2);
    const auto m3 = kernels::mean_se(s3);
    r.second[i] = m2.mean;
    r.second_se[i] = m2.se;
    r.exp_third[i] = m3.mean;
    r.exp_third_se[i] = m3.se;
    r.max_second = std::max(r.max_second, m2.mean);
    r.max_exp_third = std::max(r.max_exp_third, m3.mean);
  }
  const auto a2 = kernels::mean_se(all2);
  const auto a3 = kernels::mean_se(all3);
  r.mean_second = a2.mean;
  r.mean_second_se = a2.se;
  r.mean_exp_third = a3.mean;
  r.mean_exp_third_se = a3.se;
  r.mean_exp_third_scaled = kernels::mean_se(all3n).mean;

  if (n >= 2) {
    const std::size_t half = n / 2;
    const std::size_t R = decomps.size();
    const std::span<const double> first(all2.data(), half * R);
    const std::span<const double> second(all2.data() + half * R, (n - half) * R);
    const auto f = kernels::mean_se(first);
    const auto s = kernels::mean_se(second);
    r.growth = (s.mean - f.mean) > 3.0 * std::sqrt(f.se * f.se + s.se * s.se);
  }
  return r;
}

}  // namespace mdplab::poisson
