#include "mdplab/mdp_verify.hpp"

#include "mdplab/errors.hpp"
#include "mdplab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mdplab::verify {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kBlock = 1024;  // paths per deterministic reduction block

void check_alpha(double alpha) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw ContractViolation("alpha must lie in (0.5, 1)");
}

void check_grid(const std::vector<std::size_t>& g, const char* field = "n_grid") {
  if (g.empty()) throw ContractViolation(std::string(field) + " is empty");
  if (g.size() > 64) throw ContractViolation(std::string(field) + " has more than 64 points");
  if (g.front() < 1) throw ContractViolation(std::string(field) + " must start at n >= 1");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g[i] <= g[i - 1]) throw ContractViolation(std::string(field) + " must be strictly increasing");
  }
}

double pow_n(std::size_t n, double e) { return std::pow(static_cast<double>(n), e); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Start of path `i`: the configured state, or a stationary draw on its own stream.
struct Starter {
  std::optional<Vec> x0;
  std::optional<chains::StationarySampler> sampler;
  std::uint64_t seed = 0;

  Starter(const chains::ChainModel& model, const std::optional<Vec>& start, std::uint64_t s) : x0(start), seed(s) {
    if (x0) {
      if (x0->size() != model.dim()) throw ContractViolation("x0 dimension differs from the chain");
    } else {
      sampler = chains::StationarySampler::for_model(model, Vec::Zero(model.dim()));
    }
  }
  Vec operator()(std::size_t i) const {
    if (x0) return *x0;
    chains::NoiseDraw d(sampler->model.noise(), {seed, i});
    return chains::stationary_draw(*sampler, d);
  }
};

// Per-path bitmask of events over at most 64 grid points, reduced to counts.
std::vector<std::size_t> count_bits(const std::vector<std::uint64_t>& masks, std::size_t grid) {
  std::vector<std::size_t> c(grid, 0);
  for (auto m : masks) {
    for (std::size_t g = 0; g < grid; ++g) c[g] += (m >> g) & 1u;
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (!(alpha > 0.5 && alpha < 1.0)) throw ContractViolation("alpha: must lie in (0.5, 1)");
  if (!(epsilon > 0.0)) throw ContractViolation("epsilon: must be > 0");
  if (!(eta > 0.0)) throw ContractViolation("eta: must be > 0");
  if (!(beta >= 0.0)) throw ContractViolation("beta: must be >= 0");
  if (M < 1) throw ContractViolation("M: must be >= 1");
  check_grid(n_grid);
  if (lambda.size() > 0 && !lambda.allFinite()) throw ContractViolation("lambda: non-finite entry");
  for (double y : y_grid) {
    if (!std::isfinite(y)) throw ContractViolation("y_grid: non-finite entry");
  }
}

double speed(double alpha, std::size_t n) { return pow_n(n, 2.0 * alpha - 1.0); }

TailEstimate tail_estimate(std::size_t n, double alpha, std::size_t count, std::size_t M) {
  const auto pr = stats::proportion(count, M);
  const double s = speed(alpha, n);
  TailEstimate t;
  t.n = n;
  t.M = M;
  t.count = count;
  t.p_hat = pr.p_hat;
  t.ci = pr.ci;
  t.zero_count = pr.zero_count;
  t.rule_of_three = pr.rule_of_three;
  t.has_exponent = count >= 5;
  t.exponent = t.has_exponent ? std::log(pr.p_hat) / s : kNaN;
  t.exponent_ci = {std::log(pr.ci.lo) / s, std::log(pr.ci.hi) / s};
  return t;
}

bool exponents_nonincreasing(const std::vector<TailEstimate>& tails) {
  for (std::size_t k = 2; k < tails.size(); ++k) {
    if (tails[k].exponent_ci.lo > tails[k - 1].exponent_ci.hi) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Stochastic exponential

std::string to_string(LaplaceMode m) { return m == LaplaceMode::closed_form ? "closed_form" : "inner_mc"; }

StochasticExponentialResult stochastic_exponential(const poisson::PoissonSolution& U, const Mat& B, const Vec& lambda,
                                                   double alpha, std::size_t n, std::uint64_t seed,
                                                   const StochasticExponentialOptions& opts) {
  check_alpha(alpha);
  if (n < 1) throw ContractViolation("n must be >= 1");
  const int p = U.observable().out_dim;
  if (lambda.size() != p) throw ContractViolation("lambda dimension differs from the observable");
  if (B.rows() != p || B.cols() != p) throw ContractViolation("B dimension differs from the observable");
  if (opts.trajectories < 1) throw ContractViolation("need at least one trajectory");

  StochasticExponentialResult r;
  r.n = n;
  r.alpha = alpha;
  r.lambda = lambda;
  r.target = 0.5 * lambda.dot(B * lambda);
  const double s = speed(alpha, n);
  const double na = pow_n(n, alpha);
  const auto& model = U.model();

  if (U.closed_form()) {
    // <lambda, zeta> = <G* lambda, xi - E xi>; independent of the path.
    r.mode = LaplaceMode::closed_form;
    const Vec g = U.gain().transpose() * lambda;
    double per_step = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) per_step += centred_log_mgf(model.noise(), g(j) / na);
    const double logE = static_cast<double>(n) * per_step;
    r.log_E.assign(opts.trajectories, logE);
    r.normalized.assign(opts.trajectories, s * logE);
  } else {
    r.mode = LaplaceMode::inner_mc;
    if (opts.M_inner < 2) throw ContractViolation("inner Monte Carlo needs M_inner >= 2");
    const std::function<Vec(const Vec&)> Ufn =
        opts.U_override ? opts.U_override : std::function<Vec(const Vec&)>([&U](const Vec& x) { return U(x); });
    const Starter start(model, std::nullopt, rng::derive(seed, "se-start"));
    const std::uint64_t path_seed = rng::derive(seed, "se-path");
    const std::uint64_t inner_seed = rng::derive(seed, "se-inner");
    const double Mi = static_cast<double>(opts.M_inner);
    const double corr = opts.bias_correction ? Mi / (Mi - 1.0) : 1.0;

    struct PathOut {
      double logE = 0.0;
      double var = 0.0;
    };
    const auto outs = kernels::map_indices(
        opts.trajectories,
        [&](std::size_t t) {
          PathOut o;
          Vec x = start(t);
          chains::NoiseDraw path(model.noise(), {path_seed, t});
          std::vector<double> a(opts.M_inner);
          std::vector<Vec> v(opts.M_inner);
          for (std::size_t i = 0; i < n; ++i) {
            chains::NoiseDraw inner(model.noise(), {inner_seed, t * (n + 1) + i});
            Vec mean = Vec::Zero(p);
            for (std::size_t k = 0; k < opts.M_inner; ++k) {
              v[k] = Ufn(model.step_unchecked(x, inner.next()));
              mean += v[k];
            }
            mean /= Mi;
            double amax = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < opts.M_inner; ++k) {
              a[k] = lambda.dot(v[k] - mean) / na;
              amax = std::max(amax, a[k]);
            }
            double acc = 0.0;
            double sq = 0.0;
            double sq2 = 0.0;
            for (double ak : a) {
              acc += std::exp(ak - amax);
              sq += ak * ak;
              sq2 += ak * ak * ak * ak;
            }
            // log-mean-exp of centred draws; its leading term is half the
            // biased sample variance, hence the M/(M-1) correction.
            o.logE += corr * (amax + std::log(acc / Mi));
            const double m2 = sq / Mi;
            o.var += std::max(0.0, sq2 / Mi - m2 * m2) / (4.0 * Mi);
            x = model.step_unchecked(x, path.next());
          }
          return o;
        },
        opts.exec);
    r.bias_corrected = opts.bias_correction;
    for (const auto& o : outs) {
      r.log_E.push_back(o.logE);
      r.normalized.push_back(s * o.logE);
      r.inner_se = std::max(r.inner_se, s * std::sqrt(o.var));
    }
    if (opts.M_inner < 32) {
      r.warning = "inner Monte Carlo uses fewer than 32 draws per transform";
    } else if (r.inner_se > opts.warn_relative_se * std::abs(r.target)) {
      std::ostringstream os;
      os << "inner Monte Carlo SE " << r.inner_se << " exceeds " << opts.warn_relative_se
         << " of the target; increase M_inner";
      r.warning = os.str();
    }
  }

  for (double v : r.normalized) r.gaps.push_back(std::abs(v - r.target));
  r.gap_mean = kernels::compensated_sum(r.gaps) / static_cast<double>(r.gaps.size());
  r.gap_median = median(r.gaps);
  r.gap_max = *std::max_element(r.gaps.begin(), r.gaps.end());
  return r;
}

PuhalskiiReport puhalskii_condition_check(const ExperimentConfig& cfg, const poisson::PoissonSolution& U,
                                          const poisson::CovarianceEstimate& B, StochasticExponentialOptions opts) {
  cfg.validate();
  const int p = U.observable().out_dim;
  const Vec lambda = cfg.lambda.size() ? cfg.lambda : Vec::Ones(p);
  opts.trajectories = cfg.M;
  PuhalskiiReport rep;
  const std::uint64_t base = rng::derive(cfg.seed, "puhalskii");
  rep.exact_identity = U.closed_form();
  for (std::size_t n : cfg.n_grid) {
    auto res = stochastic_exponential(U, B.B_hat, lambda, cfg.alpha, n, rng::derive(base, n), opts);
    if (!rep.per_n.empty() && res.gap_median > rep.per_n.back().gap_median) rep.median_gap_decreasing = false;
    if (res.gap_max > 1e-10 * std::abs(res.target) && res.gap_max != 0.0) rep.exact_identity = false;
    rep.per_n.push_back(std::move(res));
  }
  if (!U.closed_form()) rep.exact_identity = false;
  return rep;
}

namespace {

template <class T>
std::function<T(const Vec&)> tabulate_impl(const std::function<T(const Vec&)>& f, double lo, double hi,
                                           std::size_t points) {
  if (!(hi > lo) || points < 2) throw ContractViolation("tabulation needs hi > lo and at least 2 points");
  std::vector<T> table;
  table.reserve(points);
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) table.push_back(f(vec_of({lo + h * static_cast<double>(i)})));
  return [table = std::move(table), lo, h, points](const Vec& x) -> T {
    if (x.size() != 1) throw ContractViolation("tabulated function takes a scalar state");
    const double u = (x(0) - lo) / h;
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(points - 2)));
    const double w = u - static_cast<double>(k);
    return T((1.0 - w) * table[k] + w * table[k + 1]);
  };
}

}  // namespace

std::function<Vec(const Vec&)> tabulate_scalar(const std::function<Vec(const Vec&)>& f, double lo, double hi,
                                               std::size_t points) {
  return tabulate_impl<Vec>(f, lo, hi, points);
}

std::function<Mat(const Vec&)> tabulate_scalar_matrix(const std::function<Mat(const Vec&)>& f, double lo, double hi,
                                               std::size_t points) {
  return tabulate_impl<Mat>(f, lo, hi, points);
}

// ---------------------------------------------------------------------------
// Dembo-type averages

BOfX conditional_covariance_evaluator(const poisson::PoissonSolution& U, std::size_t M_inner, std::uint64_t seed) {
  const rng::SeedAddress addr{rng::derive(seed, "b-of-x"), 0};
  return [&U, M_inner, addr](const Vec& x) { return poisson::conditional_covariance(U, x, M_inner, addr).B_hat; };
}

ObservableSpec dembo_observable(BOfX B_of_x, const Mat& B, const Vec& lambda, int in_dim, double lipschitz_K) {
  if (B.rows() != lambda.size() || B.cols() != lambda.size()) throw ContractViolation("B and lambda disagree");
  return ObservableSpec::custom(
      "dembo_h", in_dim, 1,
      [B_of_x = std::move(B_of_x), B, lambda](const Vec& x) {
        Vec out(1);
        out(0) = lambda.dot((B_of_x(x) - B) * lambda);
        return out;
      },
      lipschitz_K);
}

DemboReport dembo_average_check(const ExperimentConfig& cfg, const chains::ChainModel& model, const BOfX& B_of_x,
                                const Mat& B, bool recenter, std::size_t centering_count, kernels::Exec exec) {
  cfg.validate();
  const Vec lambda = cfg.lambda.size() ? cfg.lambda : Vec::Ones(B.rows());
  if (lambda.size() != B.rows()) throw ContractViolation("lambda dimension differs from B");
  auto h = [&](const Vec& x) { return lambda.dot((B_of_x(x) - B) * lambda); };

  DemboReport rep;
  if (recenter) {
    const auto sampler = chains::StationarySampler::for_model(model, Vec::Zero(model.dim()));
    const auto xs = chains::stationary_sample(sampler, centering_count, rng::derive(cfg.seed, "dembo-centre"), exec);
    const auto hs = kernels::map_indices(xs.size(), [&](std::size_t i) { return h(xs[i]); }, exec);
    rep.h_centering = kernels::mean_se(hs).mean;
  }
  const double c = rep.h_centering;
  const Starter start(model, cfg.x0, rng::derive(cfg.seed, "dembo-start"));
  const std::uint64_t path_seed = rng::derive(cfg.seed, "dembo-path");
  const std::size_t G = cfg.n_grid.size();
  const std::size_t n_max = cfg.n_grid.back();

  struct PathOut {
    std::vector<double> avg;
    bool all_zero = true;
  };
  const auto outs = kernels::map_indices(
      cfg.M,
      [&](std::size_t m) {
        PathOut o;
        o.avg.reserve(G);
        Vec x = start(m);
        chains::NoiseDraw noise(model.noise(), {path_seed, m});
        double sum = 0.0;
        std::size_t g = 0;
        for (std::size_t i = 1; i <= n_max; ++i) {
          const double hv = h(x) - c;
          if (hv != 0.0) o.all_zero = false;
          sum += hv;
          if (i == cfg.n_grid[g]) {
            o.avg.push_back(sum / static_cast<double>(i));
            ++g;
          }
          if (i < n_max) x = model.step_unchecked(x, noise.next());
        }
        return o;
      },
      exec);

  rep.identically_zero = std::all_of(outs.begin(), outs.end(), [](const PathOut& o) { return o.all_zero; });
  std::vector<double> col(cfg.M);
  for (std::size_t g = 0; g < G; ++g) {
    std::size_t count = 0;
    for (std::size_t m = 0; m < cfg.M; ++m) {
      col[m] = std::abs(outs[m].avg[g]);
      if (col[m] > cfg.epsilon) ++count;
    }
    const auto ms = kernels::mean_se(col);
    rep.mean_abs_avg.push_back(ms.mean);
    rep.mean_abs_avg_se.push_back(ms.se);
    rep.tails.push_back(tail_estimate(cfg.n_grid[g], cfg.alpha, count, cfg.M));
  }
  double last = std::numeric_limits<double>::infinity();
  for (const auto& t : rep.tails) {
    if (!t.has_exponent) continue;
    if (t.exponent > last) rep.exponent_decreasing = false;
    last = t.exponent;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Tail probabilities

std::vector<TailEstimate> tail_probability(const ExperimentConfig& cfg, const chains::ChainModel& model,
                                           const ObservableSpec& obs, const Vec& y, double eps, TailShape shape,
                                           kernels::Exec exec) {
  cfg.validate();
  if (obs.in_dim != model.dim()) throw ContractViolation("observable input dimension differs from the chain");
  if (y.size() != obs.out_dim) throw ContractViolation("y dimension differs from the observable");
  if (shape == TailShape::ball && !(eps > 0.0)) throw ContractViolation("ball radius must be > 0");
  const double yy = y.squaredNorm();
  const Starter start(model, cfg.x0, rng::derive(cfg.seed, "tail-start"));
  const std::uint64_t path_seed = rng::derive(cfg.seed, "tail-path");
  const std::size_t n_max = cfg.n_grid.back();
  std::vector<double> na;
  for (std::size_t n : cfg.n_grid) na.push_back(pow_n(n, cfg.alpha));

  const auto masks = kernels::map_indices(
      cfg.M,
      [&](std::size_t m) {
        std::uint64_t mask = 0;
        Vec x = start(m);
        chains::NoiseDraw noise(model.noise(), {path_seed, m});
        Vec sum = Vec::Zero(obs.out_dim);
        std::size_t g = 0;
        for (std::size_t i = 1; i <= n_max; ++i) {
          sum += obs(x);
          if (i == cfg.n_grid[g]) {
            const Vec S = sum / na[g];
            const bool hit = shape == TailShape::ball ? norm1(Vec(S - y)) <= eps : S.dot(y) >= yy;
            if (hit) mask |= std::uint64_t{1} << g;
            ++g;
          }
          if (i < n_max) x = model.step_unchecked(x, noise.next());
        }
        return mask;
      },
      exec);
  const auto counts = count_bits(masks, cfg.n_grid.size());
  std::vector<TailEstimate> out;
  for (std::size_t g = 0; g < counts.size(); ++g) out.push_back(tail_estimate(cfg.n_grid[g], cfg.alpha, counts[g], cfg.M));
  return out;
}

// ---------------------------------------------------------------------------
// Negligibility

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::state: return "state";
    case Quantity::U_of_state: return "U_of_state";
    case Quantity::corrector: return "corrector";
  }
  return "?";
}

NegligibilityReport negligibility_check(const ExperimentConfig& cfg, const chains::ChainModel& model, Quantity q,
                                        const poisson::PoissonSolution* U, kernels::Exec exec) {
  cfg.validate();
  if (q != Quantity::state && U == nullptr) throw ContractViolation("this quantity needs a Poisson solution");
  if (U && U->model().dim() != model.dim()) throw ContractViolation("Poisson solution belongs to another chain");
  const Starter start(model, cfg.x0, rng::derive(cfg.seed, "neg-start"));
  const std::uint64_t path_seed = rng::derive(cfg.seed, "neg-path");
  const std::size_t G = cfg.n_grid.size();
  const std::size_t n_max = cfg.n_grid.back();

  auto measure = [&](const Vec& x_first, const Vec& x) -> double {
    switch (q) {
      case Quantity::state: return norm1(x);
      case Quantity::U_of_state: return norm1((*U)(x));
      case Quantity::corrector: return norm1(Vec((*U)(x_first) - (*U)(x)));
    }
    return 0.0;
  };

  const auto values = kernels::map_indices(
      cfg.M,
      [&](std::size_t m) {
        std::vector<double> v;
        v.reserve(G);
        const Vec x_first = start(m);
        Vec x = x_first;
        chains::NoiseDraw noise(model.noise(), {path_seed, m});
        std::size_t g = 0;
        for (std::size_t i = 1; i <= n_max; ++i) {
          x = model.step_unchecked(x, noise.next());
          if (i == cfg.n_grid[g]) {
            v.push_back(measure(x_first, x));
            ++g;
          }
        }
        return v;
      },
      exec);

  NegligibilityReport rep;
  rep.quantity = q;

  // Analytic pieces. A stationary start is the chain run from 0 for the
  // burn-in, so the anchor state is 0 there.
  const bool contracting = !model.is_exotic();
  double rho = 0.0, Kc = 1.0, ell = 1.0, f00 = 0.0, logE = 0.0, delta = 0.0, LU = 0.0, U0 = 0.0;
  const double anchor = cfg.x0 ? norm1(*cfg.x0) : 0.0;
  if (contracting) {
    rho = model.contraction_rate();
    Kc = model.contraction_constant();
    ell = model.noise_modulus();
    f00 = norm1(model.step_unchecked(Vec::Zero(model.dim()), Vec::Zero(model.noise_dim())));
    delta = std::min(model.noise().delta, 0.5 * max_finite_delta(model.noise()));
    rep.chernoff_delta = delta;
    if (delta > 0.0) logE = std::log(exponential_moment(model.noise(), delta).value);
    if (U) {
      LU = U->lipschitz_U();
      const auto u0 = U->evaluate(Vec::Zero(model.dim()));
      U0 = norm1(u0.value) + static_cast<double>(u0.value.size()) * u0.combined_error();
    }
  }
  const bool bounded = model.noise().bounded();
  const double xi_max = abs_max(model.noise());

  for (std::size_t g = 0; g < G; ++g) {
    const std::size_t n = cfg.n_grid[g];
    NegligibilityRow row;
    row.threshold = cfg.epsilon * pow_n(n, cfg.alpha);
    std::size_t count = 0;
    for (const auto& v : values) count += v[g] > row.threshold ? 1 : 0;
    row.tail = tail_estimate(n, cfg.alpha, count, cfg.M);

    if (contracting) {
      const double a = Kc * std::pow(rho, static_cast<double>(n)) * anchor + Kc * f00 / (1.0 - rho);
      // Threshold t on |X_n| implied by the quantity's threshold.
      double t = row.threshold;
      bool ok = true;
      if (q == Quantity::U_of_state) {
        t = (row.threshold - U0) / LU;
      } else if (q == Quantity::corrector) {
        if (cfg.x0) {
          t = row.threshold / LU - anchor;
        } else {
          ok = false;  // the random start term has no deterministic bound
        }
      }
      if (ok && delta > 0.0) {
        row.has_chernoff = true;
        const double logp = std::min(0.0, logE - delta * (1.0 - rho) * (t - a) / (Kc * ell));
        row.chernoff_exponent = logp / speed(cfg.alpha, n);
      }
      if (ok && bounded) {
        const double xmax = a + Kc * ell * xi_max / (1.0 - rho);
        row.has_deterministic = true;
        switch (q) {
          case Quantity::state: row.deterministic_bound = xmax; break;
          case Quantity::U_of_state: row.deterministic_bound = U0 + LU * xmax; break;
          case Quantity::corrector: row.deterministic_bound = LU * (anchor + xmax); break;
        }
        if (row.threshold >= row.deterministic_bound && count > 0) row.bound_respected = false;
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Geometric noise sums

GeometricTailReport geometric_noise_tail_check(double rho, const NoiseSpec& noise, double delta, double alpha,
                                               double eps, const std::vector<std::size_t>& n_grid, std::size_t M,
                                               std::uint64_t seed, kernels::Exec exec) {
  check_alpha(alpha);
  check_grid(n_grid);
  noise.validate();
  if (!(rho >= 0.0 && rho < 1.0)) throw ContractViolation("rho must lie in [0, 1)");
  if (!(delta > 0.0) || !(delta < max_finite_delta(noise))) {
    throw ContractViolation("delta must be positive with E e^{delta|xi|} finite");
  }
  if (!(eps > 0.0)) throw ContractViolation("eps must be > 0");
  if (M < 1) throw ContractViolation("M must be >= 1");

  GeometricTailReport rep;
  rep.log_moment = std::log(exponential_moment(noise, delta).value);
  const std::uint64_t base = rng::derive(seed, "geometric");
  for (std::size_t n : n_grid) {
    GeometricTailRow row;
    row.threshold = eps * pow_n(n, alpha);
    const std::uint64_t s_n = rng::derive(base, n);
    const auto hits = kernels::map_indices(
        M,
        [&](std::size_t m) {
          chains::NoiseDraw d(noise, {s_n, m});
          double S = 0.0;  // Horner form of sum_j rho^j |xi_{n-j}|
          for (std::size_t k = 0; k < n; ++k) S = rho * S + norm1(d.next());
          return static_cast<unsigned char>(S >= row.threshold);
        },
        exec);
    const std::size_t count = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
    row.tail = tail_estimate(n, alpha, count, M);
    const double sp = speed(alpha, n);
    row.bound_exponent = std::min(0.0, rep.log_moment - delta * (1.0 - rho) * row.threshold) / sp;
    row.display_exponent = (rep.log_moment - delta * row.threshold) / sp;
    row.literal_exponent = (rep.log_moment - delta * row.threshold / (1.0 - rho)) / sp;
    if (count > 0) {
      const double lo = row.tail.exponent_ci.lo;
      row.pass = lo <= row.bound_exponent;
      row.display_respected = lo <= row.display_exponent;
      row.literal_respected = lo <= row.literal_exponent;
    }
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Martingale envelope

std::string to_string(IncrementKind k) {
  switch (k) {
    case IncrementKind::rademacher: return "rademacher";
    case IncrementKind::gaussian: return "gaussian";
    case IncrementKind::laplace: return "laplace";
  }
  return "?";
}

double gaussian_abs_cubed_exp(double s, double t) {
  if (!(s > 0.0)) return 0.0;
  // 2 e^{t^2 s^2 / 2} E[W^3; W > 0] with W ~ N(t s^2, s^2), via the partial
  // moments of a standard normal above a = -t s.
  const double mu = t * s * s;
  const double a = -t * s;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * 3.14159265358979323846);
  const double m0 = stats::normal_cdf(-a);
  const double m1 = phi;
  const double m2 = a * phi + m0;
  const double m3 = (a * a + 2.0) * phi;
  const double w3 = mu * mu * mu * m0 + 3.0 * mu * mu * s * m1 + 3.0 * mu * s * s * m2 + s * s * s * m3;
  return 2.0 * std::exp(0.5 * t * t * s * s) * w3;
}

KCertificate certify_K(const IncrementSpec& inc, double eps) {
  if (!(inc.scale > 0.0)) throw ContractViolation("increment scale must be > 0");
  KCertificate k;
  // The proof evaluates the third moment at delta = eps / K <= eps.
  k.delta = std::max(inc.delta, eps);
  const double c = inc.scale;
  switch (inc.kind) {
    case IncrementKind::rademacher:
      k.second_moment = c * c;
      k.exp_third = c * c * c * std::exp(k.delta * c);
      break;
    case IncrementKind::gaussian:
      k.second_moment = c * c;
      k.exp_third = gaussian_abs_cubed_exp(c, k.delta);
      break;
    case IncrementKind::laplace:
      if (!(k.delta < 1.0 / c)) {
        throw ContractViolation("laplace increments: E|zeta|^3 e^{delta|zeta|} is infinite for delta >= 1/scale");
      }
      k.second_moment = 2.0 * c * c;
      k.exp_third = 6.0 / c * std::pow(1.0 / c - k.delta, -4.0);
      break;
  }
  k.K = std::max({1.0, k.second_moment, k.exp_third});
  return k;
}

MartingaleTailReport martingale_tail_bound_check(const IncrementSpec& inc, double alpha, double eps,
                                                 const std::vector<std::size_t>& n_grid, std::size_t M,
                                                 std::uint64_t seed, kernels::Exec exec) {
  check_alpha(alpha);
  check_grid(n_grid);
  if (!(eps > 0.0)) throw ContractViolation("eps must be > 0");
  if (eps >= 3.0) throw ContractViolation("eps >= 3: the martingale envelope is only established for eps < 3");

  MartingaleTailReport rep;
  rep.increments = inc;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.certificate = certify_K(inc, eps);
  const double K = rep.certificate.K;
  const double c = inc.scale;

  NoiseSpec law;
  switch (inc.kind) {
    case IncrementKind::rademacher: law = NoiseSpec::rademacher(c); break;
    case IncrementKind::gaussian: law = NoiseSpec::gaussian(c); break;
    case IncrementKind::laplace: law = NoiseSpec::laplace(c); break;
  }
  const std::uint64_t base = rng::derive(seed, "martingale");

  for (std::size_t n : n_grid) {
    MartingaleTailRow row;
    row.n = n;
    const double sp = speed(alpha, n);
    const double dn = static_cast<double>(n);
    row.envelope = -eps * eps * pow_n(n, 2.0 * (1.0 - alpha)) * (0.5 - eps / 6.0) / K;
    row.envelope_two_sided = row.envelope + kLog2 / sp;

    double log_one = kNaN;
    if (inc.kind == IncrementKind::rademacher) {
      // M_n = c (2 S - n) > n eps  <=>  S >= floor(n (c + eps) / (2c)) + 1
      const auto k = static_cast<std::size_t>(std::floor(dn * (c + eps) / (2.0 * c))) + 1;
      log_one = stats::log_binomial_half_upper(n, k);
    } else if (inc.kind == IncrementKind::gaussian) {
      log_one = stats::log_normal_sf(std::sqrt(dn) * eps / c);
    }
    if (!std::isnan(log_one)) {
      row.has_exact = true;
      row.exact_one_sided = log_one / sp;
      row.exact_two_sided = (kLog2 + log_one) / sp;
      row.pass = row.exact_one_sided <= row.envelope && row.exact_two_sided <= row.envelope_two_sided;
    }

    if (M > 0) {
      const std::uint64_t s_n = rng::derive(base, n);
      const double thr = dn * eps;
      const auto hits = kernels::map_indices(
          M,
          [&](std::size_t m) {
            rng::Stream st(s_n, m);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += sample_component(law, st);
            return static_cast<unsigned char>(std::abs(sum) > thr);
          },
          exec);
      const std::size_t count = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
      row.mc = tail_estimate(n, alpha, count, M);
      if (count > 0 && row.mc.exponent_ci.lo > row.envelope_two_sided) row.pass = false;
    }
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gaussian perturbation

PerturbationReport gaussian_perturbation_tail(double beta, double eta, double alpha,
                                              const std::vector<std::size_t>& n_grid) {
  check_alpha(alpha);
  check_grid(n_grid);
  if (!(beta > 0.0)) throw ContractViolation("beta must be > 0");
  if (!(eta >= 0.0)) throw ContractViolation("eta must be >= 0");
  PerturbationReport rep;
  rep.beta = beta;
  rep.eta = eta;
  rep.alpha = alpha;
  for (std::size_t n : n_grid) {
    PerturbationRow row;
    row.n = n;
    const double sp = speed(alpha, n);
    row.bound = -eta * eta / (2.0 * beta);
    row.chernoff_lambda = pow_n(n, alpha) * eta / (static_cast<double>(n) * std::sqrt(beta));
    const double ls = stats::log_normal_sf(pow_n(n, alpha - 0.5) * eta / std::sqrt(beta));
    row.exact_one_sided = ls / sp;
    row.exact_two_sided = (kLog2 + ls) / sp;
    row.pass = row.exact_one_sided <= row.bound && row.exact_two_sided <= row.bound;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Exotic chain

ExoticReport exotic_mdp_experiment(const ExperimentConfig& cfg, double m, const NoiseSpec& noise,
                                   kernels::Exec exec) {
  cfg.validate();
  if (!noise.zero_mean()) throw ContractViolation("the exotic experiment requires zero-mean noise");
  if (cfg.y_grid.empty()) throw ContractViolation("y_grid is empty");
  const auto model = chains::ChainModel::exotic_sign(m, noise);
  const double delta = model.exotic().delta;
  const auto adm = chains::exotic_admissibility(m, noise, delta);
  const double x0 = cfg.x0 ? (*cfg.x0)(0) : 0.0;
  if (cfg.x0 && cfg.x0->size() != 1) throw ContractViolation("x0 must be scalar for the exotic chain");

  ExoticReport rep;
  rep.m = m;
  rep.delta = delta;
  rep.threshold = adm.threshold;
  const std::size_t G = cfg.n_grid.size();
  const std::size_t Y = cfg.y_grid.size();
  const std::size_t n_max = cfg.n_grid.back();
  std::vector<double> na;
  for (std::size_t n : cfg.n_grid) na.push_back(pow_n(n, cfg.alpha));
  const std::uint64_t path_seed = rng::derive(cfg.seed, "exotic-path");

  // Fixed blocks of paths keep the reduction order independent of the workers.
  struct BlockOut {
    std::vector<double> v_sum, v_sq;   // per k = 0..n_max
    std::vector<std::size_t> hits;     // G x Y
    double residual = 0.0;
  };
  const std::size_t blocks = (cfg.M + kBlock - 1) / kBlock;
  const auto outs = kernels::map_indices(
      blocks,
      [&](std::size_t b) {
        BlockOut o;
        o.v_sum.assign(n_max + 1, 0.0);
        o.v_sq.assign(n_max + 1, 0.0);
        o.hits.assign(G * Y, 0);
        const std::size_t end = std::min(cfg.M, (b + 1) * kBlock);
        for (std::size_t p = b * kBlock; p < end; ++p) {
          rng::Stream st(path_seed, p);
          double x = x0;
          double signs = 0.0;
          double xis = 0.0;
          double v = std::exp(delta * std::abs(x));
          o.v_sum[0] += v;
          o.v_sq[0] += v * v;
          std::size_t g = 0;
          for (std::size_t k = 1; k <= n_max; ++k) {
            const double s = (x > 0.0) - (x < 0.0);
            const double xi = sample_component(noise, st);
            signs += s;
            xis += xi;
            x = x - m * s + xi;
            v = std::exp(delta * std::abs(x));
            o.v_sum[k] += v;
            o.v_sq[k] += v * v;
            const double ka = pow_n(k, cfg.alpha);
            const double resid = std::abs(signs / ka - ((x0 - x) / (m * ka) + xis / (m * ka)));
            o.residual = std::max(o.residual, resid);
            if (k == cfg.n_grid[g]) {
              const double S = signs / na[g];
              for (std::size_t j = 0; j < Y; ++j) {
                const double y = cfg.y_grid[j];
                const bool hit = y >= 0.0 ? S >= y : S <= y;
                o.hits[g * Y + j] += hit ? 1 : 0;
              }
              ++g;
            }
          }
        }
        return o;
      },
      exec);

  std::vector<double> v_sum(n_max + 1, 0.0), v_sq(n_max + 1, 0.0);
  std::vector<std::size_t> hits(G * Y, 0);
  for (const auto& o : outs) {
    for (std::size_t k = 0; k <= n_max; ++k) {
      v_sum[k] += o.v_sum[k];
      v_sq[k] += o.v_sq[k];
    }
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
    rep.max_decomposition_residual = std::max(rep.max_decomposition_residual, o.residual);
  }
  rep.decomposition_pass = rep.max_decomposition_residual <= 1e-12;

  const double dM = static_cast<double>(cfg.M);
  rep.lyapunov_bound = std::exp(delta * std::abs(x0)) + adm.ell / (1.0 - adm.rho);
  rep.lyapunov_pass = true;
  for (std::size_t k = 0; k <= n_max; ++k) {
    const double mean = v_sum[k] / dM;
    const double var = cfg.M > 1 ? std::max(0.0, (v_sq[k] - dM * mean * mean) / (dM - 1.0)) : 0.0;
    const double se = std::sqrt(var / dM);
    rep.lyapunov_mean.push_back(mean);
    rep.lyapunov_se.push_back(se);
    if (mean > rep.lyapunov_bound + 3.0 * se) rep.lyapunov_pass = false;
  }

  const double var_xi = component_variance(noise);
  const double sd = std::sqrt(var_xi);
  for (std::size_t g = 0; g < G; ++g) {
    const std::size_t n = cfg.n_grid[g];
    const double sp = speed(cfg.alpha, n);
    for (std::size_t j = 0; j < Y; ++j) {
      ExoticRow row;
      row.n = n;
      row.y = cfg.y_grid[j];
      row.target_rate = m * m * row.y * row.y / (2.0 * var_xi);
      row.tail = tail_estimate(n, cfg.alpha, hits[g * Y + j], cfg.M);
      const double ls = stats::log_normal_sf(m * std::abs(row.y) * pow_n(n, cfg.alpha - 0.5) / sd);
      row.iid_one_sided = ls / sp;
      row.iid_two_sided = (kLog2 + ls) / sp;
      if (row.tail.has_exponent && row.target_rate > 0.0) {
        row.relative_error = std::abs(row.tail.exponent + row.target_rate) / row.target_rate;
        row.within_30pct = row.relative_error <= 0.3;
      } else {
        row.relative_error = kNaN;
      }
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace mdplab::verify
