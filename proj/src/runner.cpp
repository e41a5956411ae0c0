#include "mdplab/runner.hpp"

#include "mdplab/poisson.hpp"
#include "mdplab/ratefn.hpp"
#include "mdplab/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>

namespace mdplab::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ95 = 1.959963984540054;

Row row(std::size_t n, double alpha, std::string q, double v, double lo, double hi, double env) {
  return Row{n, alpha, std::move(q), v, lo, hi, env};
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string idx(const std::string& name, Eigen::Index i) { return name + "[" + std::to_string(i) + "]"; }
std::string idx(const std::string& name, Eigen::Index i, Eigen::Index j) {
  return name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

Json tail_json(const verify::TailEstimate& t) {
  Json j;
  j["n"] = t.n;
  j["M"] = t.M;
  j["count"] = t.count;
  j["p_hat"] = number_to_json(t.p_hat);
  j["p_ci"] = Json::array({number_to_json(t.ci.lo), number_to_json(t.ci.hi)});
  j["has_exponent"] = t.has_exponent;
  j["exponent"] = t.has_exponent ? number_to_json(t.exponent) : Json(nullptr);
  j["exponent_ci"] = Json::array({number_to_json(t.exponent_ci.lo), number_to_json(t.exponent_ci.hi)});
  if (t.zero_count) j["rule_of_three"] = number_to_json(t.rule_of_three);
  return j;
}

// Exponent row: the point value only when enough exceedances were seen.
Row exponent_row(const verify::TailEstimate& t, double alpha, std::string q, double env) {
  return row(t.n, alpha, std::move(q), t.has_exponent ? t.exponent : kNaN, t.exponent_ci.lo, t.exponent_ci.hi, env);
}

Row probability_row(const verify::TailEstimate& t, double alpha, std::string q) {
  return row(t.n, alpha, std::move(q), t.p_hat, t.ci.lo, t.ci.hi, t.zero_count ? t.rule_of_three : kNaN);
}

void matrix_rows(CheckResult& c, const std::string& name, const Mat& v, const Mat* se, const Mat* ref) {
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double s = se ? (*se)(i, j) : kNaN;
      c.rows.push_back(row(0, kNaN, idx(name, i, j), v(i, j), v(i, j) - kZ95 * s, v(i, j) + kZ95 * s,
                           ref ? (*ref)(i, j) : kNaN));
    }
  }
}

// Shared, lazily built state. Checks run in dependency order and reuse what
// earlier checks computed.
class Context {
 public:
  Context(const RunConfig& cfg, kernels::Exec exec) : cfg_(cfg), exec_(exec), model_(build_model(cfg.model)) {}

  const RunConfig& cfg() const { return cfg_; }
  kernels::Exec exec() const { return exec_; }
  const chains::ChainModel& model() const { return model_; }
  std::uint64_t seed(const char* name) const { return rng::derive(cfg_.seed, name); }

  const ObservableSpec& observable() {
    if (!obs_) {
      const auto raw = build_observable(cfg_.observable, model_.dim());
      obs_ = center(raw, model_, seed("centering"), cfg_.observable.centering_samples, exec_);
    }
    return *obs_;
  }

  poisson::PoissonOptions poisson_options(bool closed) const {
    poisson::PoissonOptions o;
    o.N = cfg_.poisson.N;
    o.M = cfg_.poisson.M;
    o.radius = cfg_.poisson.radius;
    o.tail_tolerance = cfg_.poisson.tail_tolerance;
    o.use_closed_form = closed;
    o.seed = seed("poisson");
    o.exec = exec_;
    return o;
  }

  const poisson::PoissonSolution& U() {
    if (!U_) U_ = std::make_unique<poisson::PoissonSolution>(model_, observable(), poisson_options(true));
    return *U_;
  }

  /// Asymptotic covariance: exact when available, otherwise the series estimate.
  const poisson::CovarianceEstimate& B() {
    if (!B_) {
      if (model_.is_exotic()) {
        // S_n is a scaled noise sum up to a bounded term: B = E xi^2 / m^2.
        poisson::CovarianceEstimate e;
        e.method = poisson::CovarianceMethod::closed_form;
        const double m = model_.exotic().m;
        e.B_hat = Mat::Constant(1, 1, component_variance(model_.noise()) / (m * m));
        e.se = Mat::Zero(1, 1);
        B_ = e;
      } else if (U().closed_form()) {
        B_ = poisson::closed_form_covariance(model_, observable());
      } else {
        B_ = poisson::asymptotic_covariance_series(model_, observable(), cfg_.covariance.N, cfg_.covariance.M,
                                                   seed("covariance.series"), cfg_.covariance.tolerance, exec_);
      }
    }
    return *B_;
  }
  void set_B(poisson::CovarianceEstimate b) { B_ = std::move(b); }
  bool has_B() const { return B_.has_value(); }

  Vec start_state() {
    if (cfg_.experiment.x0) return *cfg_.experiment.x0;
    const auto sampler = chains::StationarySampler::for_model(model_, Vec::Zero(model_.dim()));
    return chains::stationary_sample(sampler, 1, seed("start"), exec_)[0];
  }

  int out_dim() { return observable().out_dim; }

 private:
  const RunConfig& cfg_;
  kernels::Exec exec_;
  chains::ChainModel model_;
  std::optional<ObservableSpec> obs_;
  std::unique_ptr<poisson::PoissonSolution> U_;
  std::optional<poisson::CovarianceEstimate> B_;
};

std::size_t check_poisson_oracle(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& U = ctx.U();
  std::unique_ptr<poisson::PoissonSolution> mc_owner;
  const poisson::PoissonSolution* mc = &U;
  if (U.closed_form()) {
    mc_owner = std::make_unique<poisson::PoissonSolution>(ctx.model(), ctx.observable(), ctx.poisson_options(false));
    mc = mc_owner.get();
  }
  c.detail["N"] = mc->N();
  c.detail["M"] = mc->M();
  c.detail["reference"] = U.closed_form() ? "closed_form" : "poisson_residual";
  Json pts = Json::array();
  for (std::size_t k = 0; k < cfg.poisson.points.size(); ++k) {
    const Vec& x = cfg.poisson.points[k];
    const auto est = mc->evaluate(x);
    const double err = est.combined_error();
    Json pj;
    pj["x"] = to_json(x);
    pj["U_hat"] = to_json(est.value);
    pj["se"] = to_json(est.se);
    pj["tail_bound"] = number_to_json(est.tail_bound);
    const std::string tag = "U(x" + std::to_string(k) + ")";
    if (U.closed_form()) {
      const Vec ref = U(x);
      pj["U_exact"] = to_json(ref);
      for (Eigen::Index i = 0; i < est.value.size(); ++i) {
        const double v = est.value(i);
        c.rows.push_back(row(0, kNaN, idx(tag, i), v, v - kZ95 * est.se(i), v + kZ95 * est.se(i), ref(i)));
        if (std::abs(v - ref(i)) > 0.02 * std::abs(ref(i)) + 3.0 * err) c.soft_pass = false;
      }
    } else {
      const auto res = poisson::poisson_residual(*mc, x, cfg.poisson.M, rng::derive(ctx.seed("poisson.residual"), k));
      pj["residual"] = to_json(res.residual);
      pj["residual_error"] = number_to_json(res.combined_error);
      for (Eigen::Index i = 0; i < est.value.size(); ++i) {
        const double v = est.value(i);
        c.rows.push_back(row(0, kNaN, idx(tag, i), v, v - kZ95 * est.se(i), v + kZ95 * est.se(i), kNaN));
        c.rows.push_back(row(0, kNaN, idx("residual(x" + std::to_string(k) + ")", i), res.residual(i),
                             -3.0 * res.combined_error, 3.0 * res.combined_error, 0.0));
        if (std::abs(res.residual(i)) > 3.0 * res.combined_error) c.soft_pass = false;
      }
    }
    pts.push_back(std::move(pj));
  }
  c.detail["points"] = std::move(pts);
  if (!U.closed_form()) c.notes.push_back("no closed form for this model; U is checked through its equation residual");
  return mc->M();
}

std::size_t check_covariance(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg().covariance;
  const auto& U = ctx.U();
  const auto series = poisson::asymptotic_covariance_series(ctx.model(), ctx.observable(), cfg.N, cfg.M,
                                                            ctx.seed("covariance.series"), cfg.tolerance, ctx.exec());
  // B(x) is always sampled so the ergodic route stays an independent estimate.
  const auto ergodic =
      poisson::asymptotic_covariance_ergodic(U, cfg.n, ctx.seed("covariance.ergodic"), cfg.M_inner, ctx.exec());
  std::optional<poisson::CovarianceEstimate> exact;
  if (U.closed_form()) exact = poisson::closed_form_covariance(ctx.model(), ctx.observable());
  const Mat* ref = exact ? &exact->B_hat : nullptr;

  matrix_rows(c, "B_series", series.B_hat, &series.se, ref);
  matrix_rows(c, "B_ergodic", ergodic.B_hat, &ergodic.se, ref);
  if (exact) matrix_rows(c, "B_closed_form", exact->B_hat, nullptr, nullptr);

  c.detail["series"] = to_json(series);
  c.detail["ergodic"] = to_json(ergodic);
  if (exact) c.detail["closed_form"] = to_json(*exact);

  bool agree = true;
  bool near_exact = true;
  for (Eigen::Index i = 0; i < series.B_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < series.B_hat.cols(); ++j) {
      const double joint = std::hypot(series.se(i, j), ergodic.se(i, j));
      if (std::abs(series.B_hat(i, j) - ergodic.B_hat(i, j)) > 3.0 * joint) agree = false;
      if (ref) {
        const double tol = 0.05 * std::max(std::abs((*ref)(i, j)), ref->cwiseAbs().maxCoeff() * 1e-3);
        if (std::abs(series.B_hat(i, j) - (*ref)(i, j)) > tol) near_exact = false;
        if (std::abs(ergodic.B_hat(i, j) - (*ref)(i, j)) > tol) near_exact = false;
      }
    }
  }
  c.detail["agree_within_3_joint_se"] = agree;
  if (ref) c.detail["within_5pct_of_closed_form"] = near_exact;
  c.hard_pass = series.psd_ok() && ergodic.psd_ok();
  c.soft_pass = agree && near_exact;
  if (!exact) ctx.set_B(series);
  return cfg.M;
}

std::size_t check_telescoping(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& U = ctx.U();
  const auto traj = chains::simulate(ctx.model(), ctx.start_state(), cfg.telescoping.n, {ctx.seed("telescoping"), 0});
  const auto d = poisson::martingale_decompose(U, traj, cfg.telescoping.M_inner, ctx.seed("telescoping.inner"));
  const double envelope = d.closed_form ? 1e-10 : d.propagated_error;
  c.rows.push_back(row(cfg.telescoping.n, kNaN, "max_residual", d.max_telescoping_residual, kNaN, kNaN, envelope));
  c.detail["n"] = cfg.telescoping.n;
  c.detail["closed_form"] = d.closed_form;
  c.detail["max_residual"] = number_to_json(d.max_telescoping_residual);
  c.detail["propagated_error"] = number_to_json(d.propagated_error);
  c.detail["replay_error"] = number_to_json(traj.replay_error(ctx.model()));
  const bool ok = d.max_telescoping_residual <= envelope;
  if (d.closed_form) {
    c.hard_pass = ok;
  } else {
    c.soft_pass = ok;
    c.notes.push_back("Monte Carlo U: residual compared with the propagated estimation error");
  }
  return 1;
}

std::size_t check_rate_function(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg().rate_function;
  Mat B;
  ratefn::CutoffPolicy policy = ratefn::CutoffPolicy::exact();
  if (cfg.B) {
    B = *cfg.B;
    c.detail["B_source"] = "config";
  } else {
    const auto& est = ctx.B();
    B = est.B_hat;
    c.detail["B_source"] = poisson::to_string(est.method);
    if (est.method != poisson::CovarianceMethod::closed_form) policy = ratefn::CutoffPolicy::statistical(est.max_se());
  }
  const auto rf = ratefn::build(B, policy);
  const auto pen = ratefn::penrose_residuals(rf);
  c.detail["rate_function"] = to_json(rf);
  c.detail["penrose"] = {{"bpb", number_to_json(pen.bpb)},          {"pbp", number_to_json(pen.pbp)},
                         {"pb_sym", number_to_json(pen.pb_sym)},    {"bp_sym", number_to_json(pen.bp_sym)},
                         {"orthogonality", number_to_json(pen.orthogonality)},
                         {"reconstruction", number_to_json(pen.reconstruction)}};
  c.rows.push_back(row(0, kNaN, "penrose_max_residual", pen.max(), kNaN, kNaN, 1e-10));
  if (!(pen.max() <= 1e-10)) c.hard_pass = false;

  std::vector<Vec> ys = cfg.y;
  if (ys.empty()) ys.push_back(Vec::Ones(rf.dim()));
  Json yj = Json::array();
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const Vec& y = ys[k];
    if (y.size() != rf.dim()) {
      throw SchemaError("rate_function.y[" + std::to_string(k) + "]", "dimension differs from B");
    }
    const std::string tag = "y" + std::to_string(k);
    const auto I = ratefn::rate(rf, y);
    const auto reg = ratefn::regularization_limit_check(rf, y, cfg.betas);
    Json e;
    e["y"] = to_json(y);
    e["in_range"] = reg.in_range;
    e["I"] = number_to_json(I.as_double());
    e["range_distance"] = number_to_json(ratefn::range_distance(rf, y));
    e["betas"] = reg.betas;
    e["I_beta"] = reg.values;
    e["monotone"] = reg.monotone;
    c.rows.push_back(row(0, kNaN, "I(" + tag + ")", I.as_double(), kNaN, kNaN, kNaN));
    for (std::size_t b = 0; b < reg.betas.size(); ++b) {
      const std::string bl = "[beta=" + label(reg.betas[b]) + "]";
      if (reg.in_range) {
        c.rows.push_back(row(0, kNaN, "I_beta_gap(" + tag + ")" + bl, reg.gaps[b], kNaN, kNaN, reg.gap_bounds[b]));
        if (!(reg.gaps[b] <= reg.gap_bounds[b] + 1e-12)) c.hard_pass = false;
      } else {
        c.rows.push_back(
            row(0, kNaN, "beta_I_beta(" + tag + ")" + bl, reg.scaled[b], kNaN, kNaN, reg.perp_half_norm2));
      }
    }
    if (reg.in_range) {
      e["gaps"] = reg.gaps;
      e["gap_bounds"] = reg.gap_bounds;
    } else {
      e["scaled"] = reg.scaled;
      e["perp_half_norm2"] = number_to_json(reg.perp_half_norm2);
      e["fitted_coefficient"] = number_to_json(reg.fitted_coefficient);
      if (!reg.scaled.empty()) {
        const double last = reg.scaled.back();
        const bool ok = std::abs(last - reg.perp_half_norm2) <= 0.01 * reg.perp_half_norm2;
        e["limit_within_1pct"] = ok;
        if (!ok) c.hard_pass = false;
      }
    }
    yj.push_back(std::move(e));
  }
  c.detail["points"] = std::move(yj);
  return 0;
}

std::size_t check_stochastic_exponential(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& U = ctx.U();
  const auto& B = ctx.B();
  const int p = ctx.out_dim();
  std::vector<Vec> lambdas;
  if (cfg.experiment.lambda.size() > 0) {
    lambdas.push_back(cfg.experiment.lambda);
  } else {
    for (double s : {0.1, 1.0, 5.0}) lambdas.push_back(Vec::Constant(p, s));
  }
  verify::StochasticExponentialOptions opts;
  opts.M_inner = cfg.stochastic_exponential.M_inner;
  opts.exec = ctx.exec();
  const auto& tab = cfg.stochastic_exponential.tabulate;
  if (tab.points > 0 && !U.closed_form() && ctx.model().dim() == 1) {
    opts.U_override = verify::tabulate_scalar([&U](const Vec& x) { return U(x); }, tab.lo, tab.hi, tab.points);
    c.notes.push_back("U tabulated on [" + label(tab.lo) + ", " + label(tab.hi) + "] with " +
                      std::to_string(tab.points) + " points");
  }
  Json per_lambda = Json::array();
  bool exact_all = true;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    auto e = cfg.experiment;
    e.lambda = lambdas[li];
    const auto rep = verify::puhalskii_condition_check(e, U, B, opts);
    const std::string tag = lambdas.size() == 1 ? std::string() : "[lambda=" + label(lambdas[li](0)) + "]";
    Json lj;
    lj["lambda"] = to_json(lambdas[li]);
    lj["exact_identity"] = rep.exact_identity;
    lj["median_gap_decreasing"] = rep.median_gap_decreasing;
    Json per_n = Json::array();
    for (const auto& r : rep.per_n) {
      const auto ms = kernels::mean_se(r.normalized);
      c.rows.push_back(row(r.n, r.alpha, "normalized_log_E" + tag, ms.mean, ms.mean - kZ95 * ms.se,
                           ms.mean + kZ95 * ms.se, r.target));
      c.rows.push_back(row(r.n, r.alpha, "gap_median" + tag, r.gap_median, kNaN, r.gap_max, 0.0));
      Json nj;
      nj["n"] = r.n;
      nj["mode"] = verify::to_string(r.mode);
      nj["target"] = number_to_json(r.target);
      nj["gap_mean"] = number_to_json(r.gap_mean);
      nj["gap_median"] = number_to_json(r.gap_median);
      nj["gap_max"] = number_to_json(r.gap_max);
      nj["inner_se"] = number_to_json(r.inner_se);
      nj["bias_corrected"] = r.bias_corrected;
      per_n.push_back(std::move(nj));
      if (!r.warning.empty()) c.notes.push_back("n=" + std::to_string(r.n) + tag + ": " + r.warning);
    }
    lj["per_n"] = std::move(per_n);
    per_lambda.push_back(std::move(lj));
    if (U.closed_form()) {
      exact_all = exact_all && rep.exact_identity;
    } else if (!rep.median_gap_decreasing) {
      c.soft_pass = false;
    }
  }
  c.detail["closed_form"] = U.closed_form();
  c.detail["lambdas"] = std::move(per_lambda);
  if (U.closed_form()) c.hard_pass = exact_all;
  return cfg.experiment.M;
}

std::size_t check_dembo(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& U = ctx.U();
  const auto& B = ctx.B();
  verify::BOfX Bx = verify::conditional_covariance_evaluator(U, cfg.dembo.M_inner, ctx.seed("dembo.inner"));
  const auto& tab = cfg.dembo.tabulate;
  if (tab.points > 0 && !U.closed_form() && ctx.model().dim() == 1) {
    Bx = verify::tabulate_scalar_matrix(Bx, tab.lo, tab.hi, tab.points);
    c.notes.push_back("B(x) tabulated on [" + label(tab.lo) + ", " + label(tab.hi) + "]");
  }
  auto e = cfg.experiment;
  e.seed = ctx.seed("dembo");
  const auto rep = verify::dembo_average_check(e, ctx.model(), Bx, B.B_hat, cfg.dembo.recenter,
                                               cfg.dembo.centering_samples, ctx.exec());
  Json tails = Json::array();
  for (std::size_t k = 0; k < rep.tails.size(); ++k) {
    const auto& t = rep.tails[k];
    c.rows.push_back(exponent_row(t, e.alpha, "exponent", kNaN));
    c.rows.push_back(row(t.n, e.alpha, "mean_abs_average", rep.mean_abs_avg[k],
                         rep.mean_abs_avg[k] - kZ95 * rep.mean_abs_avg_se[k],
                         rep.mean_abs_avg[k] + kZ95 * rep.mean_abs_avg_se[k], kNaN));
    tails.push_back(tail_json(t));
  }
  c.detail["tails"] = std::move(tails);
  c.detail["h_centering"] = number_to_json(rep.h_centering);
  c.detail["identically_zero"] = rep.identically_zero;
  c.detail["exponent_decreasing"] = rep.exponent_decreasing;
  c.notes.push_back("informational: finite-n decay of the averaged exponent is reported, not adjudicated");
  return e.M;
}

std::size_t check_tail(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& obs = ctx.observable();
  const auto& B = ctx.B();
  ratefn::CutoffPolicy policy = B.method == poisson::CovarianceMethod::closed_form
                                    ? ratefn::CutoffPolicy::exact()
                                    : ratefn::CutoffPolicy::statistical(B.max_se());
  const auto rf = ratefn::build(B.B_hat, policy);
  std::vector<double> ys = cfg.experiment.y_grid;
  if (ys.empty()) ys.push_back(1.0);
  auto e = cfg.experiment;
  e.seed = ctx.seed("tail");
  Json per_y = Json::array();
  for (double ys_k : ys) {
    const Vec y = Vec::Constant(obs.out_dim, ys_k);
    double env;
    if (cfg.tail.shape == verify::TailShape::half_space) {
      // inf of I over {<z, y> >= |y|^2} is |y|^4 / (2 y*By).
      const double q = y.dot(B.B_hat * y);
      env = q > 0 ? -std::pow(y.squaredNorm(), 2) / (2.0 * q) : -std::numeric_limits<double>::infinity();
    } else {
      env = -ratefn::rate(rf, y).as_double();
    }
    const auto tails = verify::tail_probability(e, ctx.model(), obs, y, cfg.tail.radius, cfg.tail.shape, ctx.exec());
    const std::string tag = "[y=" + label(ys_k) + "]";
    Json yj;
    yj["y"] = number_to_json(ys_k);
    yj["minus_rate"] = number_to_json(env);
    Json tj = Json::array();
    for (const auto& t : tails) {
      c.rows.push_back(exponent_row(t, e.alpha, "exponent" + tag, env));
      c.rows.push_back(probability_row(t, e.alpha, "probability" + tag));
      tj.push_back(tail_json(t));
    }
    yj["tails"] = std::move(tj);
    yj["exponents_nonincreasing"] = verify::exponents_nonincreasing(tails);
    per_y.push_back(std::move(yj));
  }
  c.detail["shape"] = cfg.tail.shape == verify::TailShape::ball ? "ball" : "half_space";
  c.detail["radius"] = number_to_json(cfg.tail.radius);
  c.detail["points"] = std::move(per_y);
  c.notes.push_back("informational: envelope is the limiting exponent, not a finite-n bound");
  return e.M;
}

std::size_t check_negligibility(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto q = cfg.negligibility.quantity;
  const poisson::PoissonSolution* U = q == verify::Quantity::state ? nullptr : &ctx.U();
  auto e = cfg.experiment;
  e.seed = ctx.seed("negligibility");
  const auto rep = verify::negligibility_check(e, ctx.model(), q, U, ctx.exec());
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    c.rows.push_back(probability_row(r.tail, e.alpha, "exceedance_probability"));
    c.rows.push_back(exponent_row(r.tail, e.alpha, "exponent", r.has_chernoff ? r.chernoff_exponent : kNaN));
    if (!r.bound_respected) c.hard_pass = false;
    if (r.has_chernoff && r.tail.count > 0 && r.tail.exponent_ci.lo > r.chernoff_exponent) c.soft_pass = false;
    Json rj = tail_json(r.tail);
    rj["threshold"] = number_to_json(r.threshold);
    if (r.has_chernoff) rj["chernoff_exponent"] = number_to_json(r.chernoff_exponent);
    if (r.has_deterministic) rj["deterministic_bound"] = number_to_json(r.deterministic_bound);
    rj["bound_respected"] = r.bound_respected;
    rows.push_back(std::move(rj));
  }
  c.detail["quantity"] = verify::to_string(q);
  c.detail["epsilon"] = number_to_json(e.epsilon);
  c.detail["chernoff_delta"] = number_to_json(rep.chernoff_delta);
  c.detail["rows"] = std::move(rows);
  return e.M;
}

std::size_t check_geometric_noise(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const double rho = cfg.geometric_noise.rho.value_or(ctx.model().contraction_rate());
  const double delta = cfg.geometric_noise.delta.value_or(ctx.model().noise().delta);
  const auto& e = cfg.experiment;
  const auto rep = verify::geometric_noise_tail_check(rho, ctx.model().noise(), delta, e.alpha, e.epsilon, e.n_grid,
                                                      e.M, ctx.seed("geometric_noise"), ctx.exec());
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    c.rows.push_back(exponent_row(r.tail, e.alpha, "exponent", r.bound_exponent));
    c.rows.push_back(probability_row(r.tail, e.alpha, "probability"));
    Json rj = tail_json(r.tail);
    rj["threshold"] = number_to_json(r.threshold);
    rj["bound_exponent"] = number_to_json(r.bound_exponent);
    rj["display_exponent"] = number_to_json(r.display_exponent);
    rj["literal_exponent"] = number_to_json(r.literal_exponent);
    rj["display_respected"] = r.display_respected;
    rj["literal_respected"] = r.literal_respected;
    rows.push_back(std::move(rj));
  }
  c.detail["rho"] = number_to_json(rho);
  c.detail["delta"] = number_to_json(delta);
  c.detail["log_moment"] = number_to_json(rep.log_moment);
  c.detail["rows"] = std::move(rows);
  c.soft_pass = rep.pass;
  return e.M;
}

std::size_t check_martingale_tail(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& s = cfg.martingale_tail;
  const auto& grid = s.n_grid.empty() ? cfg.experiment.n_grid : s.n_grid;
  const std::size_t M = s.M > 0 ? s.M : cfg.experiment.M;
  const double alpha = cfg.experiment.alpha;
  const auto rep =
      verify::martingale_tail_bound_check(s.increments, alpha, s.eps, grid, M, ctx.seed("martingale_tail"), ctx.exec());
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    if (r.has_exact) {
      c.rows.push_back(row(r.n, alpha, "exact_one_sided", r.exact_one_sided, kNaN, kNaN, r.envelope));
      c.rows.push_back(row(r.n, alpha, "exact_two_sided", r.exact_two_sided, kNaN, kNaN, r.envelope_two_sided));
      if (!(r.exact_one_sided <= r.envelope && r.exact_two_sided <= r.envelope_two_sided)) c.hard_pass = false;
    }
    c.rows.push_back(exponent_row(r.mc, alpha, "mc_two_sided", r.envelope_two_sided));
    if (r.mc.count > 0 && r.mc.exponent_ci.lo > r.envelope_two_sided) c.soft_pass = false;
    Json rj;
    rj["n"] = r.n;
    rj["has_exact"] = r.has_exact;
    if (r.has_exact) {
      rj["exact_one_sided"] = number_to_json(r.exact_one_sided);
      rj["exact_two_sided"] = number_to_json(r.exact_two_sided);
    }
    rj["envelope"] = number_to_json(r.envelope);
    rj["envelope_two_sided"] = number_to_json(r.envelope_two_sided);
    rj["mc"] = tail_json(r.mc);
    rows.push_back(std::move(rj));
  }
  c.detail["increments"] = verify::to_string(s.increments.kind);
  c.detail["scale"] = number_to_json(s.increments.scale);
  c.detail["eps"] = number_to_json(s.eps);
  c.detail["certificate"] = {{"delta", number_to_json(rep.certificate.delta)},
                             {"second_moment", number_to_json(rep.certificate.second_moment)},
                             {"exp_third", number_to_json(rep.certificate.exp_third)},
                             {"K", number_to_json(rep.certificate.K)}};
  c.detail["rows"] = std::move(rows);
  return M;
}

std::size_t check_gaussian_perturbation(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  const auto& s = cfg.gaussian_perturbation;
  const double alpha = cfg.experiment.alpha;
  Json all = Json::array();
  for (double beta : s.betas) {
    for (double eta : s.etas) {
      const auto rep = verify::gaussian_perturbation_tail(beta, eta, alpha, cfg.experiment.n_grid);
      const std::string tag = "[beta=" + label(beta) + ",eta=" + label(eta) + "]";
      Json rows = Json::array();
      for (const auto& r : rep.rows) {
        c.rows.push_back(row(r.n, alpha, "exact_one_sided" + tag, r.exact_one_sided, kNaN, kNaN, r.bound));
        c.rows.push_back(row(r.n, alpha, "exact_two_sided" + tag, r.exact_two_sided, kNaN, kNaN, r.bound));
        rows.push_back({{"n", r.n},
                        {"bound", number_to_json(r.bound)},
                        {"chernoff_lambda", number_to_json(r.chernoff_lambda)},
                        {"exact_one_sided", number_to_json(r.exact_one_sided)},
                        {"exact_two_sided", number_to_json(r.exact_two_sided)},
                        {"pass", r.pass}});
      }
      all.push_back({{"beta", number_to_json(beta)}, {"eta", number_to_json(eta)}, {"rows", std::move(rows)}});
      if (!rep.pass) c.hard_pass = false;
    }
  }
  c.detail["cases"] = std::move(all);
  return 0;
}

std::size_t check_exotic(Context& ctx, CheckResult& c) {
  const auto& cfg = ctx.cfg();
  auto e = cfg.experiment;
  e.seed = ctx.seed("exotic");
  const double m = ctx.model().exotic().m;
  const auto rep = verify::exotic_mdp_experiment(e, m, ctx.model().noise(), ctx.exec());
  Json rows = Json::array();
  bool within = true;
  for (const auto& r : rep.rows) {
    const std::string tag = "[y=" + label(r.y) + "]";
    c.rows.push_back(exponent_row(r.tail, e.alpha, "exponent" + tag, -r.target_rate));
    c.rows.push_back(row(r.n, e.alpha, "iid_one_sided" + tag, r.iid_one_sided, kNaN, kNaN, -r.target_rate));
    c.rows.push_back(probability_row(r.tail, e.alpha, "probability" + tag));
    within = within && r.within_30pct;
    Json rj = tail_json(r.tail);
    rj["y"] = number_to_json(r.y);
    rj["target_rate"] = number_to_json(r.target_rate);
    rj["relative_error"] = number_to_json(r.relative_error);
    rj["iid_one_sided"] = number_to_json(r.iid_one_sided);
    rj["iid_two_sided"] = number_to_json(r.iid_two_sided);
    rj["within_30pct"] = r.within_30pct;
    rows.push_back(std::move(rj));
  }
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_k = 0;
  for (std::size_t k = 0; k < rep.lyapunov_mean.size(); ++k) {
    if (rep.lyapunov_mean[k] > worst) {
      worst = rep.lyapunov_mean[k];
      worst_k = k;
    }
  }
  if (!rep.lyapunov_mean.empty()) {
    const double se = rep.lyapunov_se[worst_k];
    c.rows.push_back(row(worst_k, e.alpha, "lyapunov_sup_mean", worst, worst - kZ95 * se, worst + kZ95 * se,
                         rep.lyapunov_bound));
  }
  c.rows.push_back(row(0, e.alpha, "max_decomposition_residual", rep.max_decomposition_residual, kNaN, kNaN, 1e-12));
  c.detail["m"] = number_to_json(rep.m);
  c.detail["delta"] = number_to_json(rep.delta);
  c.detail["threshold"] = number_to_json(rep.threshold);
  c.detail["max_decomposition_residual"] = number_to_json(rep.max_decomposition_residual);
  c.detail["lyapunov_bound"] = number_to_json(rep.lyapunov_bound);
  c.detail["lyapunov_pass"] = rep.lyapunov_pass;
  c.detail["within_30pct"] = within;
  c.detail["rows"] = std::move(rows);
  c.hard_pass = rep.decomposition_pass;
  c.soft_pass = rep.lyapunov_pass && within;
  return e.M;
}

using CheckFn = std::size_t (*)(Context&, CheckResult&);

CheckFn lookup(const std::string& id) {
  if (id == "poisson_oracle") return check_poisson_oracle;
  if (id == "covariance") return check_covariance;
  if (id == "telescoping") return check_telescoping;
  if (id == "rate_function") return check_rate_function;
  if (id == "stochastic_exponential") return check_stochastic_exponential;
  if (id == "dembo") return check_dembo;
  if (id == "tail") return check_tail;
  if (id == "negligibility") return check_negligibility;
  if (id == "geometric_noise") return check_geometric_noise;
  if (id == "martingale_tail") return check_martingale_tail;
  if (id == "gaussian_perturbation") return check_gaussian_perturbation;
  if (id == "exotic") return check_exotic;
  throw SchemaError("checks", "unknown check '" + id + "'");
}

}  // namespace

RunOutput run_checks(const RunConfig& cfg, kernels::Exec exec) {
  RunOutput out;
  out.results.seed = cfg.seed;
  out.results.config = cfg.source;
  out.results.config["seed"] = cfg.seed;
  Context ctx(cfg, exec);
  for (const auto& id : cfg.checks) {
    CheckResult c;
    c.id = id;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t reps = 0;
    try {
      reps = lookup(id)(ctx, c);
    } catch (const TruncationError& e) {
      c.hard_pass = false;
      c.notes.push_back(std::string("truncation: ") + e.what() + " (suggested N = " +
                        std::to_string(e.suggested_n()) + ")");
    } catch (const ConvergenceError& e) {
      c.hard_pass = false;
      c.notes.push_back(std::string("convergence: ") + e.what());
    } catch (const DivergenceError& e) {
      c.hard_pass = false;
      c.notes.push_back(std::string("divergence: ") + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out.timings.push_back({id, dt.count(), reps});
    out.results.checks.push_back(std::move(c));
  }
  return out;
}

int exit_code_for(const Results& r) {
  for (const auto& c : r.checks) {
    if (!c.hard_pass || !c.soft_pass) return kExitCheckFailed;
  }
  return kExitPass;
}

Json make_manifest(const ManifestInput& in) {
  Json m;
  m["version"] = kVersion;
  m["config"] = in.config_path;
  m["seed"] = in.seed;
  m["dry_run"] = in.dry_run;
  m["workers"] = kernels::worker_count();
  Json checks = Json::array();
  for (const auto& id : in.checks) {
    Json cj;
    cj["check_id"] = id;
    Json outputs = Json::object();
    if (!in.json_path.empty()) outputs["json"] = in.json_path;
    if (!in.csv_path.empty()) outputs["csv"] = in.csv_path;
    cj["outputs"] = std::move(outputs);
    for (const auto& t : in.timings) {
      if (t.id == id) {
        cj["seconds"] = t.seconds;
        cj["replications"] = t.replications;
      }
    }
    checks.push_back(std::move(cj));
  }
  m["checks"] = std::move(checks);
  m["wall_seconds"] = in.wall_seconds;
  return m;
}

std::pair<std::string, std::string> emit_report(const Results& r, const std::string& out_dir, Format format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const auto base = std::filesystem::path(out_dir);
  std::pair<std::string, std::string> paths;
  if (format != Format::csv) {
    paths.first = (base / "report.json").string();
    write_file(paths.first, dump_json(to_json(r)));
  }
  if (format != Format::json) {
    paths.second = (base / "report.csv").string();
    write_file(paths.second, to_csv(r));
  }
  return paths;
}

}  // namespace mdplab::cli
