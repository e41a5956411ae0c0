#pragma once

#include "mdplab/types.hpp"

#include <limits>
#include <vector>

namespace mdplab::ratefn {

enum class CutoffMode { exact, statistical };

/// How the numerical rank of B is declared.
///   exact:       eigenvalues below p' * eps * lambda_max are zero
///   statistical: eigenvalues below 3 * max_se are zero
/// `relative` overrides the exact-mode factor when positive.
struct CutoffPolicy {
  CutoffMode mode = CutoffMode::exact;
  double relative = 0.0;
  double max_se = 0.0;
  double range_tol = 0.0;  ///< 0 picks the mode default
  double symmetry_tol = 1e-10;

  static CutoffPolicy exact() { return {}; }
  static CutoffPolicy statistical(double max_se) { return {CutoffMode::statistical, 0.0, max_se, 0.0, 0.0}; }
};

/// A value of the rate function: finite, or a tagged +infinity.
struct ExtendedReal {
  double value = 0.0;
  bool infinite = false;

  static ExtendedReal inf() { return {0.0, true}; }
  static ExtendedReal finite(double v) { return {v, false}; }
  double as_double() const { return infinite ? std::numeric_limits<double>::infinity() : value; }
};

struct RateFunction {
  Mat B;
  Mat T;                ///< orthogonal, B = T diag(eigvals) T*
  Vec eigvals;          ///< ascending, clipped at 0
  Vec eff_eigvals;      ///< eigvals with those below the cutoff set to 0
  double cutoff = 0.0;  ///< absolute eigenvalue threshold
  int rank = 0;
  Mat B_pinv;
  Mat range_projector;  ///< B_pinv B
  double range_tol = 1e-8;
  CutoffMode mode = CutoffMode::exact;

  int dim() const { return static_cast<int>(B.rows()); }
};

/// Eigendecomposition with a declared rank. Throws ContractViolation when B is
/// not square, materially asymmetric, or has an eigenvalue below -tol.
RateFunction build(const Mat& B_hat, const CutoffPolicy& policy = {});

/// 1/2 y* B_pinv y if y lies in the range of B, +infinity otherwise.
ExtendedReal rate(const RateFunction& rf, const Vec& y);

/// Euclidean distance from y to the range of B.
double range_distance(const RateFunction& rf, const Vec& y);

/// 1/2 y* (B + beta I)^{-1} y through the stored eigenbasis; beta > 0.
double rate_regularized(const RateFunction& rf, double beta, const Vec& y);

struct PenroseResiduals {
  double bpb = 0.0;   ///< |B B+ B - B| / |B|
  double pbp = 0.0;   ///< |B+ B B+ - B+| / |B+|
  double pb_sym = 0.0;  ///< |(B+ B)* - B+ B|
  double bp_sym = 0.0;  ///< |(B B+)* - B B+|
  double orthogonality = 0.0;  ///< |T* T - I|
  double reconstruction = 0.0; ///< |T diag T* - B| / |B|
  double max() const;
};

/// Frobenius-norm residuals of the four Penrose identities and the factorisation.
PenroseResiduals penrose_residuals(const RateFunction& rf);

struct RegularizationReport {
  bool in_range = false;
  std::vector<double> betas;
  std::vector<double> values;      ///< I_beta(y)
  std::vector<double> gaps;        ///< |I_beta - I| (in range)
  std::vector<double> gap_bounds;  ///< beta * 1/2 |B+ y|^2 (in range)
  std::vector<double> scaled;      ///< beta * I_beta (off range)
  double limit = 0.0;              ///< I(y) in range
  double perp_half_norm2 = 0.0;    ///< 1/2 |y - P y|^2
  double fitted_coefficient = 0.0; ///< slope of I_beta against 1/beta over the two smallest beta
  bool monotone = true;            ///< I_beta nondecreasing as beta decreases
};

/// Behaviour of I_beta(y) along a strictly decreasing positive schedule.
RegularizationReport regularization_limit_check(const RateFunction& rf, const Vec& y,
                                                const std::vector<double>& betas);

}  // namespace mdplab::ratefn
