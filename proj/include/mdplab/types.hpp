#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace mdplab {

/// Upper bound on state, noise and observable dimension. Vectors and
/// matrices below keep their storage inline so the simulation hot loops
/// never touch the heap.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// |.| is the L1 norm throughout; every contraction and tail bound in this
/// library is stated in it.
inline double norm1(const Vec& v) { return v.lpNorm<1>(); }

/// Induced L1 operator norm (max absolute column sum).
inline double norm1(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

inline Vec vec_of(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vec zeros(int n) { return Vec::Zero(n); }

}  // namespace mdplab
