#include "mdplab/ratefn.hpp"

#include "mdplab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdplab::ratefn {

namespace {

double fro(const Mat& m) { return m.size() ? m.norm() : 0.0; }

void check_dim(const RateFunction& rf, const Vec& y) {
  if (y.size() != rf.dim()) throw ContractViolation("y dimension differs from B");
}

}  // namespace

RateFunction build(const Mat& B_hat, const CutoffPolicy& policy) {
  const auto p = B_hat.rows();
  if (p == 0 || p != B_hat.cols()) throw ContractViolation("B must be a non-empty square matrix");
  if (!B_hat.allFinite()) throw ContractViolation("B has non-finite entries");
  const double scale = std::max(B_hat.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double asym = (B_hat - B_hat.transpose()).cwiseAbs().maxCoeff();
  const double sym_tol = policy.mode == CutoffMode::statistical
                             ? std::max(policy.symmetry_tol * scale, 3.0 * policy.max_se)
                             : policy.symmetry_tol * scale;
  if (asym > sym_tol) {
    std::ostringstream os;
    os << "B is not symmetric: max |B - B*| = " << asym << " exceeds " << sym_tol;
    throw ContractViolation(os.str());
  }

  RateFunction rf;
  rf.mode = policy.mode;
  rf.B = 0.5 * (B_hat + B_hat.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(rf.B)};
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("symmetric eigensolver did not converge", std::numeric_limits<double>::quiet_NaN());
  }
  const Vec raw = es.eigenvalues();
  rf.T = es.eigenvectors();
  const double lmax = std::max(raw.cwiseAbs().maxCoeff(), 0.0);

  if (policy.mode == CutoffMode::statistical) {
    rf.cutoff = 3.0 * policy.max_se;
  } else {
    const double rel = policy.relative > 0.0 ? policy.relative
                                             : static_cast<double>(p) * std::numeric_limits<double>::epsilon();
    rf.cutoff = rel * lmax;
  }
  const double neg_tol = std::max(rf.cutoff, 1e-12 * lmax);
  if (raw.minCoeff() < -neg_tol) {
    std::ostringstream os;
    os << "B is indefinite: smallest eigenvalue " << raw.minCoeff() << " is below -" << neg_tol;
    throw ContractViolation(os.str());
  }
  rf.eigvals = raw.cwiseMax(0.0);
  rf.eff_eigvals = rf.eigvals;
  Vec inv = Vec::Zero(p);
  rf.rank = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (rf.eigvals(i) > rf.cutoff && rf.eigvals(i) > 0.0) {
      inv(i) = 1.0 / rf.eigvals(i);
      ++rf.rank;
    } else {
      rf.eff_eigvals(i) = 0.0;
    }
  }
  rf.B_pinv = rf.T * inv.asDiagonal() * rf.T.transpose();
  rf.B_pinv = (0.5 * (rf.B_pinv + rf.B_pinv.transpose())).eval();
  Vec proj = Vec::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i) proj(i) = inv(i) > 0.0 ? 1.0 : 0.0;
  rf.range_projector = rf.T * proj.asDiagonal() * rf.T.transpose();

  if (policy.range_tol > 0.0) {
    rf.range_tol = policy.range_tol;
  } else if (policy.mode == CutoffMode::statistical && lmax > 0.0) {
    rf.range_tol = std::max(1e-8, 3.0 * policy.max_se / lmax);
  } else {
    rf.range_tol = 1e-8;
  }
  return rf;
}

double range_distance(const RateFunction& rf, const Vec& y) {
  check_dim(rf, y);
  return (rf.range_projector * y - y).norm();
}

ExtendedReal rate(const RateFunction& rf, const Vec& y) {
  check_dim(rf, y);
  if (range_distance(rf, y) > rf.range_tol * (1.0 + y.norm())) return ExtendedReal::inf();
  // 1/2 sum over the range of (T* y)_i^2 / lambda_i
  const Vec c = rf.T.transpose() * y;
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (rf.eff_eigvals(i) > 0.0) s += c(i) * c(i) / rf.eff_eigvals(i);
  }
  return ExtendedReal::finite(0.5 * s);
}

double rate_regularized(const RateFunction& rf, double beta, const Vec& y) {
  if (!(beta > 0.0)) throw ContractViolation("beta must be > 0");
  check_dim(rf, y);
  const Vec c = rf.T.transpose() * y;
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) s += c(i) * c(i) / (rf.eff_eigvals(i) + beta);
  return 0.5 * s;
}

double PenroseResiduals::max() const {
  return std::max({bpb, pbp, pb_sym, bp_sym, orthogonality, reconstruction});
}

PenroseResiduals penrose_residuals(const RateFunction& rf) {
  const Mat& B = rf.B;
  const Mat& P = rf.B_pinv;
  const double nb = std::max(fro(B), std::numeric_limits<double>::min());
  const double np = std::max(fro(P), std::numeric_limits<double>::min());
  const int p = rf.dim();
  PenroseResiduals r;
  r.bpb = fro(B * P * B - B) / nb;
  r.pbp = fro(P * B * P - P) / np;
  const Mat PB = P * B;
  const Mat BP = B * P;
  r.pb_sym = fro(PB.transpose() - PB);
  r.bp_sym = fro(BP.transpose() - BP);
  r.orthogonality = fro(rf.T.transpose() * rf.T - Mat::Identity(p, p));
  r.reconstruction = fro(rf.T * rf.eigvals.asDiagonal() * rf.T.transpose() - B) / nb;
  return r;
}

RegularizationReport regularization_limit_check(const RateFunction& rf, const Vec& y,
                                                const std::vector<double>& betas) {
  if (betas.empty()) throw ContractViolation("beta schedule is empty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw ContractViolation("beta schedule must be positive");
    if (i > 0 && !(betas[i] < betas[i - 1])) throw ContractViolation("beta schedule must strictly decrease");
  }
  RegularizationReport r;
  r.betas = betas;
  const auto I = rate(rf, y);
  r.in_range = !I.infinite;
  const Vec perp = y - rf.range_projector * y;
  r.perp_half_norm2 = 0.5 * perp.squaredNorm();
  const Vec py = rf.B_pinv * y;
  for (double b : betas) {
    const double v = rate_regularized(rf, b, y);
    if (!r.values.empty() && v < r.values.back()) r.monotone = false;
    r.values.push_back(v);
    if (r.in_range) {
      r.gaps.push_back(std::abs(v - I.value));
      r.gap_bounds.push_back(b * 0.5 * py.squaredNorm());
    } else {
      r.scaled.push_back(b * v);
    }
  }
  if (r.in_range) r.limit = I.value;
  if (betas.size() >= 2) {
    const std::size_t k = betas.size() - 1;
    const double dinv = 1.0 / betas[k] - 1.0 / betas[k - 1];
    r.fitted_coefficient = (r.values[k] - r.values[k - 1]) / dinv;
  } else {
    r.fitted_coefficient = betas[0] * r.values[0];
  }
  return r;
}

}  // namespace mdplab::ratefn
