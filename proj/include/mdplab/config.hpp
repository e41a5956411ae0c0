#pragma once
// Run configuration: a JSON document with a versioned schema. Unknown keys
// are errors; every diagnostic carries the dotted path of the offending field.

#include "mdplab/chains.hpp"
#include "mdplab/errors.hpp"
#include "mdplab/mdp_verify.hpp"
#include "mdplab/noise.hpp"
#include "mdplab/observable.hpp"
#include "mdplab/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdplab::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ModelConfig {
  std::string type = "linear_ar";  // linear_ar | scaled_tanh | clipped_affine | componentwise_sine | exotic_sign
  Mat A;                           // linear_ar
  double c = 0.5;                  // scaled_tanh
  Vec coeffs;                      // componentwise_sine
  double a = 0.5, b = 0.0, clip = 1.0;  // clipped_affine
  double m = 2.0;                  // exotic_sign
  int dim = 1;
  NoiseSpec noise;
};

struct ObservableConfig {
  std::string type = "identity";  // zero | identity | linear | tanh | sine | sign
  Mat C;
  std::size_t centering_samples = 1'000'000;
};

struct PoissonSection {
  std::size_t N = 60;
  std::size_t M = 10000;
  double radius = 20.0;
  double tail_tolerance = 1e-3;
  std::vector<Vec> points;
};

struct CovarianceSection {
  std::size_t n = 100000;
  std::size_t N = 40;
  std::size_t M = 100000;
  std::size_t M_inner = 64;
  double tolerance = 1e-2;
};

struct TelescopingSection {
  std::size_t n = 10000;
  std::size_t M_inner = 256;
};

struct RateSection {
  std::optional<Mat> B;
  std::vector<Vec> y;
  std::vector<double> betas{1e-2, 1e-4, 1e-8};
};

struct Tabulation {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t points = 0;  // 0 disables
};

struct StochasticSection {
  std::size_t M_inner = 256;
  Tabulation tabulate;
};

struct DemboSection {
  std::size_t M_inner = 64;
  bool recenter = true;
  std::size_t centering_samples = 20000;
  Tabulation tabulate;
};

struct TailSection {
  verify::TailShape shape = verify::TailShape::half_space;
  double radius = 0.1;
};

struct NegligibilitySection {
  verify::Quantity quantity = verify::Quantity::state;
};

struct GeometricSection {
  std::optional<double> rho;
  std::optional<double> delta;
};

struct MartingaleSection {
  verify::IncrementSpec increments;
  double eps = 0.5;
  std::vector<std::size_t> n_grid;  // empty: the experiment grid
  std::size_t M = 0;
};

struct PerturbationSection {
  std::vector<double> betas{0.01, 0.1, 1.0};
  std::vector<double> etas{0.5, 1.0};
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  ModelConfig model;
  ObservableConfig observable;
  std::vector<std::string> checks;  // in execution order
  verify::ExperimentConfig experiment;
  PoissonSection poisson;
  CovarianceSection covariance;
  TelescopingSection telescoping;
  RateSection rate_function;
  StochasticSection stochastic_exponential;
  DemboSection dembo;
  TailSection tail;
  NegligibilitySection negligibility;
  GeometricSection geometric_noise;
  MartingaleSection martingale_tail;
  PerturbationSection gaussian_perturbation;
  Json source;  // the document as parsed
};

/// Known check identifiers, in dependency order.
const std::vector<std::string>& known_checks();

/// Parse and validate. Throws SchemaError (with a line number for syntax errors).
RunConfig parse_config(const std::string& text);
/// Read a file; unreadable input is an IoError.
RunConfig load_config(const std::string& path);

class IoError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path);

chains::ChainModel build_model(const ModelConfig& m);
ObservableSpec build_observable(const ObservableConfig& o, int dim);

}  // namespace mdplab::cli
