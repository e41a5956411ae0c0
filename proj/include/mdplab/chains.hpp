#pragma once

#include "mdplab/kernels.hpp"
#include "mdplab/noise.hpp"
#include "mdplab/rng.hpp"
#include "mdplab/types.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace mdplab::chains {

/// Per-coordinate Lipschitz moduli of f(., v) plus the noise modulus of f(z, .).
struct LipschitzCertificate {
  Mat rho_matrix;
  double rho = 0.0;  ///< max entry of rho_matrix
  double ell = 1.0;  ///< |f(z,v') - f(z,v'')| <= ell |v' - v''|

  static LipschitzCertificate from_matrix(const Mat& rho_matrix, double ell);

  /// Contraction factor actually usable for L1 coupling bounds: the larger of
  /// rho and the induced L1 norm of rho_matrix. Equal to rho for the
  /// componentwise maps in the catalog.
  double contraction() const;

  void validate() const;
};

enum class MapKind { scaled_tanh, clipped_affine, componentwise_sine, custom };

using StepFn = std::function<Vec(const Vec& x, const Vec& xi)>;

struct NonlinearLipschitz {
  MapKind kind = MapKind::scaled_tanh;
  std::string name;
  Vec coeffs;         ///< per-coordinate scale (tanh, sine) or slope (clipped affine)
  double offset = 0;  ///< clipped affine intercept
  double clip = 0;    ///< clipped affine clamp radius
  StepFn custom;
  LipschitzCertificate cert;
};

/// |A^n|_1 <= K rho^n for all n.
struct PowerBound {
  double K = 1.0;
  double rho = 0.0;
};

struct LinearAR {
  Mat A;
  double spectral_radius = 0.0;
  PowerBound power_bound;
};

struct ExoticSign {
  double m = 1.0;
  double delta = 0.0;  ///< a delta for which the drift condition holds
};

class ChainModel {
 public:
  using Variant = std::variant<NonlinearLipschitz, LinearAR, ExoticSign>;

  /// f_i(x, xi) = c tanh(x_i) + xi_i, certificate rho = |c|, ell = 1.
  static ChainModel scaled_tanh(double c, int dim, const NoiseSpec& noise);
  /// f_i(x, xi) = a clamp(x_i, -L, L) + b + xi_i, certificate rho = |a|, ell = 1.
  static ChainModel clipped_affine(double a, double b, double clip, int dim, const NoiseSpec& noise);
  /// f_i(x, xi) = c_i sin(x_i) + xi_i, certificate rho_ii = |c_i|, ell = 1.
  static ChainModel componentwise_sine(const Vec& c, const NoiseSpec& noise);
  /// User-supplied map; the caller is responsible for the certificate.
  static ChainModel custom(std::string name, int dim, StepFn f, const LipschitzCertificate& cert,
                           const NoiseSpec& noise);
  /// X_n = A X_{n-1} + xi_n; rejected unless the spectral radius of A is below 1.
  static ChainModel linear_ar(const Mat& A, const NoiseSpec& noise);
  static ChainModel linear_ar(double a, const NoiseSpec& noise);
  /// X_n = X_{n-1} - m sign(X_{n-1}) + xi_n with sign(0) = 0; scalar only.
  /// Rejected unless m > (1/delta) log E e^{delta|xi|} for some admissible delta.
  static ChainModel exotic_sign(double m, const NoiseSpec& noise);

  int dim() const noexcept { return dim_; }
  int noise_dim() const noexcept { return noise_.dim; }
  const NoiseSpec& noise() const noexcept { return noise_; }
  const Variant& variant() const noexcept { return variant_; }

  bool is_linear() const noexcept { return std::holds_alternative<LinearAR>(variant_); }
  bool is_nonlinear() const noexcept { return std::holds_alternative<NonlinearLipschitz>(variant_); }
  bool is_exotic() const noexcept { return std::holds_alternative<ExoticSign>(variant_); }
  const LinearAR& linear() const { return std::get<LinearAR>(variant_); }
  const NonlinearLipschitz& nonlinear() const { return std::get<NonlinearLipschitz>(variant_); }
  const ExoticSign& exotic() const { return std::get<ExoticSign>(variant_); }

  /// f(x, xi) with dimension checks.
  Vec step(const Vec& x, const Vec& xi) const;
  /// f(x, xi) without checks, for inner loops.
  Vec step_unchecked(const Vec& x, const Vec& xi) const;

  /// Geometric coupling rate: |X'_n - X''_n| <= K rho^n |x' - x''|.
  /// Not defined for the exotic chain.
  double contraction_rate() const;
  double contraction_constant() const;
  /// Noise modulus ell.
  double noise_modulus() const;

  std::string describe() const;

 private:
  static ChainModel from_nonlinear(NonlinearLipschitz m, int dim, const NoiseSpec& noise);
  ChainModel(Variant v, int dim, NoiseSpec noise) : variant_(std::move(v)), dim_(dim), noise_(noise) {}
  Variant variant_;
  int dim_ = 1;
  NoiseSpec noise_;
};

/// Free-function form of ChainModel::step.
inline Vec step(const ChainModel& model, const Vec& x, const Vec& xi) { return model.step(x, xi); }

/// Noise source for a single path. The antithetic flag reflects every draw
/// about the centre of the (symmetric) noise law.
class NoiseDraw {
 public:
  NoiseDraw(const NoiseSpec& spec, rng::SeedAddress addr, bool antithetic = false)
      : spec_(&spec), stream_(addr), antithetic_(antithetic) {}
  Vec next();

 private:
  const NoiseSpec* spec_;
  rng::Stream stream_;
  bool antithetic_;
};

struct Trajectory {
  Vec x0;
  std::vector<Vec> states;  ///< X_0 .. X_n
  std::vector<Vec> noises;  ///< xi_1 .. xi_n (noises[k-1] drives states[k])
  rng::SeedAddress seed;
  std::size_t n = 0;

  /// Maximum |step(states[k-1], noises[k-1]) - states[k]|, zero for an intact trajectory.
  double replay_error(const ChainModel& model) const;
  void write_csv(std::ostream& os) const;
};

Trajectory simulate(const ChainModel& model, const Vec& x0, std::size_t n, rng::SeedAddress seed);

/// Both chains consume the identical noise sequence.
std::pair<Trajectory, Trajectory> simulate_coupled(const ChainModel& model, const Vec& x0a,
                                                   const Vec& x0b, std::size_t n,
                                                   rng::SeedAddress seed);

/// Run `steps` steps from x, without storing the path.
Vec advance(const ChainModel& model, Vec x, std::size_t steps, NoiseDraw& noise);

struct ContractionReport {
  double max_ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::size_t trials = 0;
  std::size_t n = 0;
};

/// Sup over random initial pairs of |X'_n - X''_n| / |x' - x''| against K rho^n.
ContractionReport contraction_check(const ChainModel& model, std::size_t trials, std::size_t n,
                                    std::uint64_t seed, kernels::Exec exec = {});

/// Max |eigenvalue|. Throws ContractViolation for non-square input.
double spectral_radius(const Mat& A);

/// Constants (K, rho) with |A^n|_1 <= K rho^n, rho >= spectral radius.
PowerBound power_bound(const Mat& A);

struct ExoticAdmissibility {
  bool admissible = false;
  double threshold = 0.0;  ///< (1/delta) log E e^{delta|xi|}
  double delta = 0.0;
  double ell = 0.0;  ///< e^{delta m} E e^{delta|xi|}
  double rho = 0.0;  ///< e^{-delta m} E e^{delta|xi|}; P_x V <= rho V + ell for V = e^{delta|x|}
};

ExoticAdmissibility exotic_admissibility(double m, const NoiseSpec& noise, double delta);

enum class SamplerMethod { forward, series };

struct StationarySampler {
  ChainModel model;
  std::size_t burn_in = 0;
  Vec x_start;
  SamplerMethod method = SamplerMethod::forward;

  /// Sampler with the default burn-in for the model variant, started at x_start.
  static StationarySampler for_model(const ChainModel& model, const Vec& x_start,
                                     double tolerance = 1e-6);
};

/// Smallest burn-in meeting the coupling tolerance (contraction variants) or
/// 10 / (1 - spectral radius) steps (linear AR).
std::size_t default_burn_in(const ChainModel& model, const Vec& x_start, double tolerance = 1e-6);

/// `count` approximately stationary states, sample i drawn from stream (seed, i).
std::vector<Vec> stationary_sample(const StationarySampler& sampler, std::size_t count,
                                   std::uint64_t seed, kernels::Exec exec = {});

/// One stationary draw from a given stream (used by the estimators for their start points).
Vec stationary_draw(const StationarySampler& sampler, NoiseDraw& noise);

}  // namespace mdplab::chains
