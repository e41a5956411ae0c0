#include "mdplab/chains.hpp"

#include "mdplab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace mdplab::chains {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ContractViolation("state dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Mat diag_of(const Vec& v) { return Mat(v.asDiagonal()); }

}  // namespace

// ---------------------------------------------------------------------------
// Certificates

LipschitzCertificate LipschitzCertificate::from_matrix(const Mat& rho_matrix, double ell) {
  LipschitzCertificate c;
  c.rho_matrix = rho_matrix;
  c.rho = rho_matrix.size() ? rho_matrix.maxCoeff() : 0.0;
  c.ell = ell;
  return c;
}

double LipschitzCertificate::contraction() const { return std::max(rho, norm1(rho_matrix)); }

void LipschitzCertificate::validate() const {
  if (rho_matrix.size() == 0 || rho_matrix.rows() != rho_matrix.cols()) {
    throw ContractViolation("Lipschitz certificate needs a square rho matrix");
  }
  if ((rho_matrix.array() < 0.0).any()) throw ContractViolation("Lipschitz moduli must be >= 0");
  if (rho != rho_matrix.maxCoeff()) {
    throw ContractViolation("certificate rho must equal the max entry of rho_matrix");
  }
  if (!(ell >= 0.0)) throw ContractViolation("noise modulus ell must be >= 0");
  if (!(contraction() < 1.0)) {
    throw AdmissibilityError("lipschitz-contraction",
                             "Lipschitz certificate is not a contraction (rho = " +
                                 std::to_string(contraction()) + " >= 1)");
  }
}

// ---------------------------------------------------------------------------
// Construction

ChainModel ChainModel::from_nonlinear(NonlinearLipschitz m, int dim, const NoiseSpec& noise) {
  check_dim(dim);
  noise.validate();
  if (noise.dim != dim) throw ContractViolation("additive-noise maps need noise dim == state dim");
  if (m.cert.rho_matrix.rows() != dim) throw ContractViolation("certificate dimension mismatch");
  m.cert.validate();
  return ChainModel(std::move(m), dim, noise);
}

ChainModel ChainModel::scaled_tanh(double c, int dim, const NoiseSpec& noise) {
  check_dim(dim);
  NonlinearLipschitz m;
  m.kind = MapKind::scaled_tanh;
  m.name = "scaled_tanh";
  m.coeffs = Vec::Constant(dim, c);
  m.cert = LipschitzCertificate::from_matrix(diag_of(Vec::Constant(dim, std::abs(c))), 1.0);
  return from_nonlinear(std::move(m), dim, noise);
}

ChainModel ChainModel::clipped_affine(double a, double b, double clip, int dim,
                                      const NoiseSpec& noise) {
  check_dim(dim);
  if (!(clip > 0.0)) throw ContractViolation("clip radius must be > 0");
  NonlinearLipschitz m;
  m.kind = MapKind::clipped_affine;
  m.name = "clipped_affine";
  m.coeffs = Vec::Constant(dim, a);
  m.offset = b;
  m.clip = clip;
  m.cert = LipschitzCertificate::from_matrix(diag_of(Vec::Constant(dim, std::abs(a))), 1.0);
  return from_nonlinear(std::move(m), dim, noise);
}

ChainModel ChainModel::componentwise_sine(const Vec& c, const NoiseSpec& noise) {
  const int dim = static_cast<int>(c.size());
  check_dim(dim);
  NonlinearLipschitz m;
  m.kind = MapKind::componentwise_sine;
  m.name = "componentwise_sine";
  m.coeffs = c;
  m.cert = LipschitzCertificate::from_matrix(diag_of(c.cwiseAbs()), 1.0);
  return from_nonlinear(std::move(m), dim, noise);
}

ChainModel ChainModel::custom(std::string name, int dim, StepFn f, const LipschitzCertificate& cert,
                              const NoiseSpec& noise) {
  if (!f) throw ContractViolation("custom map must be callable");
  NonlinearLipschitz m;
  m.kind = MapKind::custom;
  m.name = std::move(name);
  m.custom = std::move(f);
  m.cert = cert;
  return from_nonlinear(std::move(m), dim, noise);
}

ChainModel ChainModel::linear_ar(const Mat& A, const NoiseSpec& noise) {
  if (A.rows() != A.cols()) throw ContractViolation("A must be square");
  const int dim = static_cast<int>(A.rows());
  check_dim(dim);
  noise.validate();
  if (noise.dim != dim) throw ContractViolation("linear AR needs noise dim == state dim");
  LinearAR lin;
  lin.A = A;
  lin.spectral_radius = spectral_radius(A);
  if (!(lin.spectral_radius < 1.0)) {
    std::ostringstream os;
    os << "Assumption 2.3 gate: eigenvalues of A must lie within the unit circle (spectral radius "
       << lin.spectral_radius << ")";
    throw AdmissibilityError("spectral-radius", os.str());
  }
  lin.power_bound = power_bound(A);
  return ChainModel(std::move(lin), dim, noise);
}

ChainModel ChainModel::linear_ar(double a, const NoiseSpec& noise) {
  Mat A(1, 1);
  A(0, 0) = a;
  return linear_ar(A, noise);
}

ChainModel ChainModel::exotic_sign(double m, const NoiseSpec& noise) {
  if (!(m > 0.0)) throw ContractViolation("exotic drift m must be > 0");
  noise.validate();
  if (noise.dim != 1) throw ContractViolation("exotic chain is scalar");
  // The threshold (1/delta) log E e^{delta|xi|} increases with delta, so if the
  // configured delta fails, smaller ones are tried.
  double delta = noise.delta;
  ExoticAdmissibility adm = exotic_admissibility(m, noise, delta);
  for (int k = 0; k < 40 && !adm.admissible; ++k) {
    delta *= 0.5;
    adm = exotic_admissibility(m, noise, delta);
  }
  if (!adm.admissible) {
    const auto first = exotic_admissibility(m, noise, noise.delta);
    std::ostringstream os;
    os << "exotic drift gate: m = " << m << " does not exceed (1/delta) log E e^{delta|xi|} = "
       << first.threshold << " (delta = " << noise.delta << ") for any delta tried";
    throw AdmissibilityError("exotic-drift", os.str());
  }
  return ChainModel(ExoticSign{m, adm.delta}, 1, noise);
}

// ---------------------------------------------------------------------------
// Dynamics

Vec ChainModel::step(const Vec& x, const Vec& xi) const {
  if (x.size() != dim_) throw ContractViolation("state dimension mismatch in step");
  if (xi.size() != noise_.dim) throw ContractViolation("noise dimension mismatch in step");
  Vec out = step_unchecked(x, xi);
  if (out.size() != dim_) throw ContractViolation("custom map returned wrong dimension");
  return out;
}

Vec ChainModel::step_unchecked(const Vec& x, const Vec& xi) const {
  struct Visitor {
    const Vec& x;
    const Vec& xi;
    Vec operator()(const NonlinearLipschitz& m) const {
      switch (m.kind) {
        case MapKind::scaled_tanh:
          return (m.coeffs.array() * x.array().tanh()).matrix() + xi;
        case MapKind::clipped_affine:
          return (m.coeffs.array() * x.array().max(-m.clip).min(m.clip) + m.offset).matrix() + xi;
        case MapKind::componentwise_sine:
          return (m.coeffs.array() * x.array().sin()).matrix() + xi;
        case MapKind::custom:
          return m.custom(x, xi);
      }
      return x;
    }
    Vec operator()(const LinearAR& l) const { return l.A * x + xi; }
    Vec operator()(const ExoticSign& e) const {
      Vec out(1);
      out(0) = x(0) - e.m * sign0(x(0)) + xi(0);
      return out;
    }
  };
  return std::visit(Visitor{x, xi}, variant_);
}

double ChainModel::contraction_rate() const {
  if (is_nonlinear()) return nonlinear().cert.contraction();
  if (is_linear()) return linear().power_bound.rho;
  throw UnsupportedVariant("the exotic chain has no global contraction rate");
}

double ChainModel::contraction_constant() const {
  if (is_nonlinear()) return 1.0;
  if (is_linear()) return linear().power_bound.K;
  throw UnsupportedVariant("the exotic chain has no global contraction rate");
}

double ChainModel::noise_modulus() const {
  if (is_nonlinear()) return nonlinear().cert.ell;
  return 1.0;
}

std::string ChainModel::describe() const {
  std::ostringstream os;
  os << std::setprecision(6);
  if (is_nonlinear()) {
    const auto& m = nonlinear();
    os << "nonlinear(" << m.name << ", d=" << dim_ << ", rho=" << m.cert.contraction() << ")";
  } else if (is_linear()) {
    os << "linear_ar(d=" << dim_ << ", spectral_radius=" << linear().spectral_radius << ")";
  } else {
    os << "exotic_sign(m=" << exotic().m << ")";
  }
  os << " + " << to_string(noise_.family) << "(loc=" << noise_.location << ", scale=" << noise_.scale
     << ")";
  return os.str();
}

Vec NoiseDraw::next() {
  Vec v = sample(*spec_, stream_);
  if (antithetic_) {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = reflect_component(*spec_, v(j));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Trajectories

double Trajectory::replay_error(const ChainModel& model) const {
  double err = 0.0;
  for (std::size_t k = 1; k < states.size(); ++k) {
    const Vec again = model.step(states[k - 1], noises[k - 1]);
    err = std::max(err, (again - states[k]).cwiseAbs().maxCoeff());
  }
  return err;
}

void Trajectory::write_csv(std::ostream& os) const {
  const auto d = states.empty() ? 0 : states.front().size();
  os << "step";
  for (Eigen::Index j = 0; j < d; ++j) os << ",x_" << (j + 1);
  os << '\n';
  char buf[32];
  for (std::size_t k = 0; k < states.size(); ++k) {
    os << k;
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", states[k](j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

Trajectory simulate(const ChainModel& model, const Vec& x0, std::size_t n, rng::SeedAddress seed) {
  if (n < 1) throw ContractViolation("simulate needs n >= 1");
  if (x0.size() != model.dim()) throw ContractViolation("x0 dimension mismatch");
  Trajectory t;
  t.x0 = x0;
  t.seed = seed;
  t.n = n;
  t.states.reserve(n + 1);
  t.noises.reserve(n);
  t.states.push_back(x0);
  NoiseDraw noise(model.noise(), seed);
  for (std::size_t k = 0; k < n; ++k) {
    t.noises.push_back(noise.next());
    t.states.push_back(model.step_unchecked(t.states.back(), t.noises.back()));
  }
  return t;
}

std::pair<Trajectory, Trajectory> simulate_coupled(const ChainModel& model, const Vec& x0a,
                                                   const Vec& x0b, std::size_t n,
                                                   rng::SeedAddress seed) {
  Trajectory a = simulate(model, x0a, n, seed);
  if (x0b.size() != model.dim()) throw ContractViolation("x0 dimension mismatch");
  Trajectory b;
  b.x0 = x0b;
  b.seed = seed;
  b.n = n;
  b.noises = a.noises;
  b.states.reserve(n + 1);
  b.states.push_back(x0b);
  for (std::size_t k = 0; k < n; ++k) b.states.push_back(model.step_unchecked(b.states.back(), b.noises[k]));
  return {std::move(a), std::move(b)};
}

Vec advance(const ChainModel& model, Vec x, std::size_t steps, NoiseDraw& noise) {
  for (std::size_t k = 0; k < steps; ++k) x = model.step_unchecked(x, noise.next());
  return x;
}

// ---------------------------------------------------------------------------
// Geometry

ContractionReport contraction_check(const ChainModel& model, std::size_t trials, std::size_t n,
                                    std::uint64_t seed, kernels::Exec exec) {
  if (model.is_exotic()) {
    throw UnsupportedVariant("contraction_check: no global contraction is claimed for the exotic chain");
  }
  constexpr double kRadius = 10.0;
  const int d = model.dim();
  const auto ratios = kernels::map_indices(
      trials,
      [&](std::size_t t) {
        rng::Stream init(rng::derive(seed, "contraction-init"), t);
        Vec xa(d), xb(d);
        for (int j = 0; j < d; ++j) {
          xa(j) = kRadius * (2.0 * init.uniform() - 1.0);
          xb(j) = kRadius * (2.0 * init.uniform() - 1.0);
        }
        const double gap0 = norm1(Vec(xa - xb));
        if (gap0 == 0.0) return 0.0;
        NoiseDraw noise(model.noise(), {seed, t});
        for (std::size_t k = 0; k < n; ++k) {
          const Vec xi = noise.next();
          xa = model.step_unchecked(xa, xi);
          xb = model.step_unchecked(xb, xi);
        }
        return norm1(Vec(xa - xb)) / gap0;
      },
      exec);
  ContractionReport r;
  r.trials = trials;
  r.n = n;
  r.max_ratio = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  r.bound = model.contraction_constant() * std::pow(model.contraction_rate(), static_cast<double>(n));
  r.pass = r.max_ratio <= r.bound * (1.0 + 1e-12) + 1e-300;
  return r;
}

double spectral_radius(const Mat& A) {
  if (A.rows() != A.cols() || A.size() == 0) throw ContractViolation("spectral_radius needs a square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalue iteration did not converge", std::numeric_limits<double>::quiet_NaN());
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

PowerBound power_bound(const Mat& A) {
  const double r = spectral_radius(A);
  const int d = static_cast<int>(A.rows());
  const double candidates[] = {r, r + (1.0 - r) / 20.0, r + (1.0 - r) / 4.0, r + (1.0 - r) / 2.0};
  for (double rho : candidates) {
    if (!(rho > 0.0)) {
      // Nilpotent A: A^d = 0, so any rho > 0 works with a finite K.
      continue;
    }
    const int window = 200 * d + static_cast<int>(std::ceil(50.0 / std::max(1e-3, 1.0 - r)));
    Mat P = Mat::Identity(d, d);
    double first_half = 0.0;
    double second_half = 0.0;
    double scale = 1.0;  // rho^n, renormalised to avoid underflow
    for (int n = 0; n <= window; ++n) {
      const double ratio = norm1(P) / scale;
      if (n <= window / 2) {
        first_half = std::max(first_half, ratio);
      } else {
        second_half = std::max(second_half, ratio);
      }
      P = P * A;
      scale *= rho;
      if (scale < 1e-250) break;
    }
    if (second_half <= first_half * (1.0 + 1e-9)) return {std::max(1.0, first_half), rho};
  }
  // Fall back to the loosest candidate with whatever K the window showed.
  const double rho = std::max(r + (1.0 - r) / 2.0, 0.5);
  Mat P = Mat::Identity(d, d);
  double K = 1.0;
  double scale = 1.0;
  for (int n = 0; n < 2000 && scale > 1e-250; ++n) {
    K = std::max(K, norm1(P) / scale);
    P = P * A;
    scale *= rho;
  }
  return {K, rho};
}

ExoticAdmissibility exotic_admissibility(double m, const NoiseSpec& noise, double delta) {
  if (!(delta > 0.0)) throw ContractViolation("delta must be > 0");
  const double moment = exponential_moment(noise, delta).value;
  ExoticAdmissibility r;
  r.delta = delta;
  r.threshold = std::log(moment) / delta;
  r.admissible = m > r.threshold;
  r.ell = std::exp(delta * m) * moment;
  r.rho = std::exp(-delta * m) * moment;
  return r;
}

// ---------------------------------------------------------------------------
// Stationary sampling

std::size_t default_burn_in(const ChainModel& model, const Vec& x_start, double tolerance) {
  const double scale = 1.0 + norm1(x_start);
  auto geometric = [&](double rho, double K) -> std::size_t {
    if (rho <= 0.0) return 1;
    const double n = std::log(tolerance / (K * scale)) / std::log(rho);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n)) + 1);
  };
  if (model.is_linear()) {
    const double r = model.linear().spectral_radius;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(10.0 / (1.0 - r))));
  }
  if (model.is_nonlinear()) return geometric(model.contraction_rate(), 1.0);
  const auto& e = model.exotic();
  const auto adm = exotic_admissibility(e.m, model.noise(), e.delta);
  const auto travel = static_cast<std::size_t>(std::ceil(std::abs(x_start(0)) / e.m));
  return travel + geometric(adm.rho, 1.0);
}

StationarySampler StationarySampler::for_model(const ChainModel& model, const Vec& x_start,
                                               double tolerance) {
  if (x_start.size() != model.dim()) throw ContractViolation("sampler start dimension mismatch");
  return StationarySampler{model, default_burn_in(model, x_start, tolerance), x_start,
                           SamplerMethod::forward};
}

Vec stationary_draw(const StationarySampler& sampler, NoiseDraw& noise) {
  if (sampler.method == SamplerMethod::series && sampler.model.is_linear()) {
    // X = A^L x + sum_{i<L} A^i xi_i
    const Mat& A = sampler.model.linear().A;
    Vec acc = noise.next();
    Vec x = sampler.x_start;
    Mat P = Mat::Identity(A.rows(), A.cols());
    for (std::size_t i = 1; i < sampler.burn_in; ++i) {
      P = P * A;
      acc += P * noise.next();
    }
    return Mat(P * A) * x + acc;
  }
  return advance(sampler.model, sampler.x_start, sampler.burn_in, noise);
}

std::vector<Vec> stationary_sample(const StationarySampler& sampler, std::size_t count,
                                   std::uint64_t seed, kernels::Exec exec) {
  if (sampler.burn_in < 1) throw ContractViolation("stationary sampler needs burn_in >= 1");
  return kernels::map_indices(
      count,
      [&](std::size_t i) {
        NoiseDraw noise(sampler.model.noise(), {seed, i});
        return stationary_draw(sampler, noise);
      },
      exec);
}

}  // namespace mdplab::chains
