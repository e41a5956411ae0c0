#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdplab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments (dimension, sign, range) was violated.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A model failed a numerical admissibility gate (spectral radius, Lipschitz
/// certificate, exotic drift threshold).
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(std::string gate, const std::string& what)
      : Error(what), gate_(std::move(gate)) {}
  const std::string& gate() const noexcept { return gate_; }

 private:
  std::string gate_;
};

/// Exponential moment requested outside the finite range of the noise law.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Series truncation leaves a tail bound above tolerance.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::size_t suggested_n)
      : Error(what), suggested_n_(suggested_n) {}
  std::size_t suggested_n() const noexcept { return suggested_n_; }

 private:
  std::size_t suggested_n_;
};

class UnsupportedVariant : public Error {
 public:
  using Error::Error;
};

}  // namespace mdplab
