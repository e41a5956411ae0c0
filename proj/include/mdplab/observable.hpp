#pragma once

#include "mdplab/chains.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/types.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace mdplab {

enum class ObservableKind { zero, identity, linear, tanh, sine, sign, custom };

/// H : R^d -> R^{p'} together with its Lipschitz constant K (L1 -> L1) and the
/// centring vector c, so that the evaluated observable is H(x) - c.
struct ObservableSpec {
  ObservableKind kind = ObservableKind::identity;
  std::string name;
  int in_dim = 1;
  int out_dim = 1;
  Mat C;  ///< linear map for zero / identity / linear
  std::function<Vec(const Vec&)> fn;
  double lipschitz_K = 1.0;
  Vec centering;
  double centering_se = 0.0;
  bool centering_analytic = true;

  static ObservableSpec zero(int in_dim, int out_dim = 1);
  static ObservableSpec identity(int dim);
  static ObservableSpec linear(const Mat& C);
  /// H_i(x) = tanh(x_i).
  static ObservableSpec tanh(int dim);
  /// H_i(x) = sin(x_i).
  static ObservableSpec sine(int dim);
  /// H(x) = x/|x| with 0/0 = 0 (scalar). Not Lipschitz.
  static ObservableSpec sign();
  static ObservableSpec custom(std::string name, int in_dim, int out_dim, std::function<Vec(const Vec&)> fn,
                               double lipschitz_K);

  /// Uncentred H(x).
  Vec raw(const Vec& x) const;
  /// H(x) - c.
  Vec operator()(const Vec& x) const { return raw(x) - centering; }

  bool is_linear() const noexcept {
    return kind == ObservableKind::zero || kind == ObservableKind::identity || kind == ObservableKind::linear;
  }
  ObservableSpec with_centering(const Vec& c, double se, bool analytic) const;
};

struct CenteringCheck {
  Vec mean;
  Vec se;
  bool centred = false;  ///< |mean| <= 3 SE componentwise (or both exactly zero)
};

/// Exact centring for linear H under a linear AR chain: c = C (I - A)^{-1} E xi.
/// Throws UnsupportedVariant for other combinations.
ObservableSpec center_analytic(const ObservableSpec& obs, const chains::ChainModel& model);

/// Centre H by a stationary sample of `count` points; the standard error is kept.
ObservableSpec center_estimated(const ObservableSpec& obs, const chains::ChainModel& model,
                                std::size_t count, std::uint64_t seed, kernels::Exec exec = {});

/// Analytic when available, otherwise estimated with at least 10^6 stationary points.
ObservableSpec center(const ObservableSpec& obs, const chains::ChainModel& model, std::uint64_t seed,
                      std::size_t count = 1'000'000, kernels::Exec exec = {});

/// Stationary sample mean of the (already centred) observable.
CenteringCheck check_centred(const ObservableSpec& obs, const chains::ChainModel& model,
                             std::size_t count, std::uint64_t seed, kernels::Exec exec = {});

}  // namespace mdplab
