#include "mdplab/observable.hpp"

#include "mdplab/errors.hpp"
#include "mdplab/stats.hpp"

#include <cmath>
#include <vector>

namespace mdplab {

ObservableSpec ObservableSpec::zero(int in_dim, int out_dim) {
  ObservableSpec o;
  o.kind = ObservableKind::zero;
  o.name = "zero";
  o.in_dim = in_dim;
  o.out_dim = out_dim;
  o.C = Mat::Zero(out_dim, in_dim);
  o.lipschitz_K = 0.0;
  o.centering = Vec::Zero(out_dim);
  return o;
}

ObservableSpec ObservableSpec::identity(int dim) {
  ObservableSpec o;
  o.kind = ObservableKind::identity;
  o.name = "identity";
  o.in_dim = o.out_dim = dim;
  o.C = Mat::Identity(dim, dim);
  o.lipschitz_K = 1.0;
  o.centering = Vec::Zero(dim);
  o.centering_analytic = false;
  return o;
}

ObservableSpec ObservableSpec::linear(const Mat& C) {
  ObservableSpec o;
  o.kind = ObservableKind::linear;
  o.name = "linear";
  o.in_dim = static_cast<int>(C.cols());
  o.out_dim = static_cast<int>(C.rows());
  o.C = C;
  o.lipschitz_K = norm1(C);
  o.centering = Vec::Zero(o.out_dim);
  o.centering_analytic = false;
  return o;
}

ObservableSpec ObservableSpec::tanh(int dim) {
  ObservableSpec o;
  o.kind = ObservableKind::tanh;
  o.name = "tanh";
  o.in_dim = o.out_dim = dim;
  o.lipschitz_K = 1.0;
  o.centering = Vec::Zero(dim);
  o.centering_analytic = false;
  return o;
}

ObservableSpec ObservableSpec::sine(int dim) {
  ObservableSpec o = tanh(dim);
  o.kind = ObservableKind::sine;
  o.name = "sine";
  return o;
}

ObservableSpec ObservableSpec::sign() {
  ObservableSpec o;
  o.kind = ObservableKind::sign;
  o.name = "sign";
  o.lipschitz_K = stats::kInf;
  o.centering = Vec::Zero(1);
  o.centering_analytic = false;
  return o;
}

ObservableSpec ObservableSpec::custom(std::string name, int in_dim, int out_dim,
                                      std::function<Vec(const Vec&)> fn, double lipschitz_K) {
  if (!fn) throw ContractViolation("custom observable must be callable");
  ObservableSpec o;
  o.kind = ObservableKind::custom;
  o.name = std::move(name);
  o.in_dim = in_dim;
  o.out_dim = out_dim;
  o.fn = std::move(fn);
  o.lipschitz_K = lipschitz_K;
  o.centering = Vec::Zero(out_dim);
  o.centering_analytic = false;
  return o;
}

Vec ObservableSpec::raw(const Vec& x) const {
  switch (kind) {
    case ObservableKind::zero:
      return Vec::Zero(out_dim);
    case ObservableKind::identity:
      return x;
    case ObservableKind::linear:
      return C * x;
    case ObservableKind::tanh:
      return x.array().tanh().matrix();
    case ObservableKind::sine:
      return x.array().sin().matrix();
    case ObservableKind::sign: {
      Vec out(1);
      out(0) = x(0) > 0.0 ? 1.0 : (x(0) < 0.0 ? -1.0 : 0.0);
      return out;
    }
    case ObservableKind::custom:
      return fn(x);
  }
  return x;
}

ObservableSpec ObservableSpec::with_centering(const Vec& c, double se, bool analytic) const {
  if (c.size() != out_dim) throw ContractViolation("centering dimension mismatch");
  ObservableSpec o = *this;
  o.centering = c;
  o.centering_se = se;
  o.centering_analytic = analytic;
  return o;
}

ObservableSpec center_analytic(const ObservableSpec& obs, const chains::ChainModel& model) {
  if (obs.kind == ObservableKind::zero) return obs.with_centering(Vec::Zero(obs.out_dim), 0.0, true);
  if (!obs.is_linear() || !model.is_linear()) {
    throw UnsupportedVariant("analytic centring needs a linear observable and a linear AR chain");
  }
  const Mat& A = model.linear().A;
  const int d = model.dim();
  const Vec mean_noise = Vec::Constant(model.noise_dim(), model.noise().location);
  const Vec mean_state = (Mat::Identity(d, d) - A).partialPivLu().solve(mean_noise);
  return obs.with_centering(obs.C * mean_state, 0.0, true);
}

namespace {

std::vector<Vec> stationary_values(const ObservableSpec& obs, const chains::ChainModel& model,
                                   std::size_t count, std::uint64_t seed, kernels::Exec exec) {
  const auto sampler = chains::StationarySampler::for_model(model, Vec::Zero(model.dim()));
  const auto xs = chains::stationary_sample(sampler, count, seed, exec);
  std::vector<Vec> hs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) hs[i] = obs.raw(xs[i]);
  return hs;
}

}  // namespace

ObservableSpec center_estimated(const ObservableSpec& obs, const chains::ChainModel& model,
                                std::size_t count, std::uint64_t seed, kernels::Exec exec) {
  if (count < 2) throw ContractViolation("centring needs at least two samples");
  const auto hs = stationary_values(obs, model, count, rng::derive(seed, "centering"), exec);
  Vec c(obs.out_dim);
  double se = 0.0;
  std::vector<double> col(hs.size());
  for (int j = 0; j < obs.out_dim; ++j) {
    for (std::size_t i = 0; i < hs.size(); ++i) col[i] = hs[i](j);
    const auto ms = kernels::mean_se(col);
    c(j) = ms.mean;
    se = std::max(se, ms.se);
  }
  return obs.with_centering(c, se, false);
}

ObservableSpec center(const ObservableSpec& obs, const chains::ChainModel& model, std::uint64_t seed,
                      std::size_t count, kernels::Exec exec) {
  if (obs.kind == ObservableKind::zero || (obs.is_linear() && model.is_linear())) {
    return center_analytic(obs, model);
  }
  return center_estimated(obs, model, std::max<std::size_t>(count, 1'000'000), seed, exec);
}

CenteringCheck check_centred(const ObservableSpec& obs, const chains::ChainModel& model,
                             std::size_t count, std::uint64_t seed, kernels::Exec exec) {
  const auto hs = stationary_values(obs, model, count, rng::derive(seed, "centering-check"), exec);
  CenteringCheck r;
  r.mean = Vec::Zero(obs.out_dim);
  r.se = Vec::Zero(obs.out_dim);
  r.centred = true;
  std::vector<double> col(hs.size());
  for (int j = 0; j < obs.out_dim; ++j) {
    for (std::size_t i = 0; i < hs.size(); ++i) col[i] = hs[i](j) - obs.centering(j);
    const auto ms = kernels::mean_se(col);
    r.mean(j) = ms.mean;
    r.se(j) = ms.se;
    if (std::abs(ms.mean) > 3.0 * ms.se && !(ms.mean == 0.0 && ms.se == 0.0)) r.centred = false;
  }
  return r;
}

}  // namespace mdplab
