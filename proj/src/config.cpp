#include "mdplab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mdplab::cli {

namespace {

// Read-only view of a JSON object that remembers which keys were consumed.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw SchemaError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_->contains(key); }
  const std::string& path() const { return path_; }

  const Json& raw(const std::string& key) const {
    seen_.insert(key);
    return (*j_)[key];
  }

  Node child(const std::string& key) const { return Node(raw(key), at(key)); }

  double num(const std::string& key, double def) const {
    if (!has(key)) return def;
    return as_num(raw(key), at(key));
  }
  std::optional<double> opt_num(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return as_num(raw(key), at(key));
  }
  std::size_t count(const std::string& key, std::size_t def) const {
    if (!has(key)) return def;
    return as_count(raw(key), at(key));
  }
  std::uint64_t u64(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw SchemaError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw SchemaError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) const {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_string()) throw SchemaError(at(key), "expected a string");
    const auto s = v.get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw SchemaError(at(key), "'" + s + "' is not one of: " + list);
    }
    return s;
  }
  std::vector<double> nums(const std::string& key, std::vector<double> def) const {
    if (!has(key)) return def;
    return as_nums(raw(key), at(key));
  }
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def) const {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_count(v[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  Vec vec(const std::string& key) const { return to_vec(as_nums(raw(key), at(key)), at(key)); }
  /// A list of vectors; scalars are accepted as 1-vectors.
  std::vector<Vec> vecs(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = at(key) + "[" + std::to_string(i) + "]";
      if (v[i].is_number()) {
        out.push_back(vec_of({as_num(v[i], p)}));
      } else {
        out.push_back(to_vec(as_nums(v[i], p), p));
      }
    }
    return out;
  }
  /// Square or rectangular matrix as an array of rows; a scalar is 1x1.
  Mat mat(const std::string& key) const {
    const Json& v = raw(key);
    if (v.is_number()) return Mat::Constant(1, 1, as_num(v, at(key)));
    if (!v.is_array() || v.empty()) throw SchemaError(at(key), "expected an array of rows");
    const auto rows = v.size();
    std::vector<std::vector<double>> r;
    for (std::size_t i = 0; i < rows; ++i) r.push_back(as_nums(v[i], at(key) + "[" + std::to_string(i) + "]"));
    const auto cols = r[0].size();
    if (rows > static_cast<std::size_t>(kMaxDim) || cols > static_cast<std::size_t>(kMaxDim) || cols == 0) {
      throw SchemaError(at(key), "matrix dimensions must lie in 1.." + std::to_string(kMaxDim));
    }
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      if (r[i].size() != cols) throw SchemaError(at(key), "rows have different lengths");
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
    }
    return m;
  }

  /// Every key must have been consumed.
  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.count(it.key())) throw SchemaError(at(it.key()), "unknown key");
    }
  }

 private:
  static double as_num(const Json& v, const std::string& p) {
    if (!v.is_number()) throw SchemaError(p, "expected a number");
    return v.get<double>();
  }
  static std::size_t as_count(const Json& v, const std::string& p) {
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) return v.get<std::size_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1e15) return static_cast<std::size_t>(d);
    }
    throw SchemaError(p, "expected a non-negative integer");
  }
  static std::vector<double> as_nums(const Json& v, const std::string& p) {
    if (!v.is_array()) throw SchemaError(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_num(v[i], p + "[" + std::to_string(i) + "]"));
    return out;
  }
  static Vec to_vec(const std::vector<double>& xs, const std::string& p) {
    if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxDim)) {
      throw SchemaError(p, "vector length must lie in 1.." + std::to_string(kMaxDim));
    }
    Vec v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<Eigen::Index>(i)) = xs[i];
    return v;
  }

  const Json* j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

NoiseSpec parse_noise(const Node& n, int default_dim) {
  NoiseSpec s;
  const auto fam = n.str("family", "gaussian", {"gaussian", "laplace", "uniform", "rademacher"});
  s.family = noise_family_from_string(fam);
  s.scale = n.num("scale", 1.0);
  s.location = n.num("location", 0.0);
  s.dim = static_cast<int>(n.count("dim", static_cast<std::size_t>(default_dim)));
  s.delta = n.num("delta", 0.5);
  n.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    throw SchemaError(n.path(), e.what());
  }
  return s;
}

ModelConfig parse_model(const Node& n) {
  ModelConfig m;
  m.type = n.str("type", "linear_ar",
                 {"linear_ar", "scaled_tanh", "clipped_affine", "componentwise_sine", "exotic_sign"});
  if (m.type == "linear_ar") {
    if (n.has("A") && n.has("a")) throw SchemaError(n.at("a"), "give either 'a' or 'A', not both");
    m.A = n.has("A") ? n.mat("A") : Mat::Constant(1, 1, n.num("a", 0.5));
    m.dim = static_cast<int>(m.A.rows());
  } else if (m.type == "scaled_tanh") {
    m.c = n.num("c", 0.5);
    m.dim = static_cast<int>(n.count("dim", 1));
  } else if (m.type == "clipped_affine") {
    m.a = n.num("a", 0.5);
    m.b = n.num("b", 0.0);
    m.clip = n.num("clip", 1.0);
    m.dim = static_cast<int>(n.count("dim", 1));
  } else if (m.type == "componentwise_sine") {
    m.coeffs = n.vec("c");
    m.dim = static_cast<int>(m.coeffs.size());
  } else {
    m.m = n.num("m", 2.0);
    m.dim = 1;
  }
  if (m.dim < 1 || m.dim > kMaxDim) throw SchemaError(n.at("dim"), "must lie in 1.." + std::to_string(kMaxDim));
  m.noise = n.has("noise") ? parse_noise(n.child("noise"), m.dim) : NoiseSpec::gaussian(1.0, m.dim);
  n.finish();
  if (m.dim != m.noise.dim) throw SchemaError(n.at("noise.dim"), "must equal the state dimension");
  return m;
}

ObservableConfig parse_observable(const Node& n, int dim) {
  ObservableConfig o;
  o.type = n.str("type", "identity", {"zero", "identity", "linear", "tanh", "sine", "sign"});
  if (o.type == "linear") {
    o.C = n.mat("C");
    if (o.C.cols() != dim) throw SchemaError(n.at("C"), "column count must equal the state dimension");
  }
  o.centering_samples = n.count("centering_samples", o.centering_samples);
  n.finish();
  return o;
}

Tabulation parse_tabulation(const Node& n) {
  Tabulation t;
  t.lo = n.num("lo", t.lo);
  t.hi = n.num("hi", t.hi);
  t.points = n.count("points", 201);
  n.finish();
  if (!(t.hi > t.lo) || t.points < 2) throw SchemaError(n.at("points"), "needs hi > lo and at least 2 points");
  return t;
}

verify::ExperimentConfig parse_experiment(const Node& n, std::uint64_t seed) {
  verify::ExperimentConfig e;
  e.alpha = n.num("alpha", e.alpha);
  if (n.has("lambda")) e.lambda = n.vec("lambda");
  e.epsilon = n.num("epsilon", e.epsilon);
  e.eta = n.num("eta", e.eta);
  e.beta = n.num("beta", e.beta);
  e.n_grid = n.counts("n_grid", {100, 1000});
  e.M = n.count("M", e.M);
  e.y_grid = n.nums("y_grid", {});
  if (n.has("x0")) e.x0 = n.vec("x0");
  e.seed = seed;
  n.finish();
  try {
    e.validate();
  } catch (const ContractViolation& err) {
    const std::string w = err.what();
    const auto colon = w.find(':');
    throw SchemaError(colon == std::string::npos ? "experiment" : n.at(w.substr(0, colon)),
                      colon == std::string::npos ? w : w.substr(colon + 2));
  }
  return e;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n'));
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k{"poisson_oracle",         "covariance", "telescoping", "rate_function",
                                          "stochastic_exponential", "dembo",      "tail",        "negligibility",
                                          "geometric_noise",        "martingale_tail", "gaussian_perturbation",
                                          "exotic"};
  return k;
}

RunConfig parse_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::ostringstream os;
    os << "line " << line_of(text, e.byte) << ": " << e.what();
    throw SchemaError("", os.str());
  }
  const Node root(doc, "");
  RunConfig c;
  c.source = doc;
  if (!root.has("schema_version")) throw SchemaError("schema_version", "missing");
  c.schema_version = static_cast<int>(root.count("schema_version", 0));
  if (c.schema_version != kSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                            std::to_string(kSchemaVersion) + ")");
  }
  c.seed = root.u64("seed", 0);
  if (root.has("model")) {
    c.model = parse_model(root.child("model"));
  } else {
    c.model.A = Mat::Constant(1, 1, 0.5);
    c.model.noise = NoiseSpec::gaussian(1.0);
  }
  c.observable = root.has("observable") ? parse_observable(root.child("observable"), c.model.dim) : ObservableConfig{};
  c.experiment = root.has("experiment") ? parse_experiment(root.child("experiment"), c.seed)
                                        : parse_experiment(Node(Json::object(), "experiment"), c.seed);

  if (root.has("checks")) {
    const Json& ch = root.raw("checks");
    if (!ch.is_array()) throw SchemaError("checks", "expected an array of check names");
    std::set<std::string> requested;
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const auto p = "checks[" + std::to_string(i) + "]";
      if (!ch[i].is_string()) throw SchemaError(p, "expected a string");
      const auto s = ch[i].get<std::string>();
      if (std::find(known_checks().begin(), known_checks().end(), s) == known_checks().end()) {
        throw SchemaError(p, "unknown check '" + s + "'");
      }
      if (!requested.insert(s).second) throw SchemaError(p, "duplicate check '" + s + "'");
    }
    for (const auto& k : known_checks()) {
      if (requested.count(k)) c.checks.push_back(k);
    }
  }

  if (root.has("poisson")) {
    const auto n = root.child("poisson");
    c.poisson.N = n.count("N", c.poisson.N);
    c.poisson.M = n.count("M", c.poisson.M);
    c.poisson.radius = n.num("radius", c.poisson.radius);
    c.poisson.tail_tolerance = n.num("tail_tolerance", c.poisson.tail_tolerance);
    if (n.has("points")) c.poisson.points = n.vecs("points");
    n.finish();
    if (c.poisson.M < 2) throw SchemaError("poisson.M", "must be >= 2");
  }
  if (c.poisson.points.empty()) {
    for (double x : {-2.0, 0.5, 3.0}) c.poisson.points.push_back(Vec::Constant(c.model.dim, x));
  }
  for (std::size_t i = 0; i < c.poisson.points.size(); ++i) {
    if (c.poisson.points[i].size() != c.model.dim) {
      throw SchemaError("poisson.points[" + std::to_string(i) + "]", "dimension differs from the model");
    }
  }
  if (root.has("covariance")) {
    const auto n = root.child("covariance");
    c.covariance.n = n.count("n", c.covariance.n);
    c.covariance.N = n.count("N", c.covariance.N);
    c.covariance.M = n.count("M", c.covariance.M);
    c.covariance.M_inner = n.count("M_inner", c.covariance.M_inner);
    c.covariance.tolerance = n.num("tolerance", c.covariance.tolerance);
    n.finish();
    if (c.covariance.M_inner < 2) throw SchemaError("covariance.M_inner", "must be >= 2");
  }
  if (root.has("telescoping")) {
    const auto n = root.child("telescoping");
    c.telescoping.n = n.count("n", c.telescoping.n);
    c.telescoping.M_inner = n.count("M_inner", c.telescoping.M_inner);
    n.finish();
  }
  if (root.has("rate_function")) {
    const auto n = root.child("rate_function");
    if (n.has("B")) c.rate_function.B = n.mat("B");
    if (n.has("y")) c.rate_function.y = n.vecs("y");
    c.rate_function.betas = n.nums("betas", c.rate_function.betas);
    n.finish();
  }
  if (root.has("stochastic_exponential")) {
    const auto n = root.child("stochastic_exponential");
    c.stochastic_exponential.M_inner = n.count("M_inner", c.stochastic_exponential.M_inner);
    if (n.has("tabulate")) c.stochastic_exponential.tabulate = parse_tabulation(n.child("tabulate"));
    n.finish();
  }
  if (root.has("dembo")) {
    const auto n = root.child("dembo");
    c.dembo.M_inner = n.count("M_inner", c.dembo.M_inner);
    c.dembo.recenter = n.flag("recenter", c.dembo.recenter);
    c.dembo.centering_samples = n.count("centering_samples", c.dembo.centering_samples);
    if (n.has("tabulate")) c.dembo.tabulate = parse_tabulation(n.child("tabulate"));
    n.finish();
  }
  if (root.has("tail")) {
    const auto n = root.child("tail");
    c.tail.shape = n.str("shape", "half_space", {"half_space", "ball"}) == "ball" ? verify::TailShape::ball
                                                                                  : verify::TailShape::half_space;
    c.tail.radius = n.num("radius", c.tail.radius);
    n.finish();
  }
  if (root.has("negligibility")) {
    const auto n = root.child("negligibility");
    const auto q = n.str("quantity", "state", {"state", "U_of_state", "corrector"});
    c.negligibility.quantity = q == "state"        ? verify::Quantity::state
                               : q == "U_of_state" ? verify::Quantity::U_of_state
                                                   : verify::Quantity::corrector;
    n.finish();
  }
  if (root.has("geometric_noise")) {
    const auto n = root.child("geometric_noise");
    c.geometric_noise.rho = n.opt_num("rho");
    c.geometric_noise.delta = n.opt_num("delta");
    n.finish();
  }
  if (root.has("martingale_tail")) {
    const auto n = root.child("martingale_tail");
    const auto k = n.str("increments", "rademacher", {"rademacher", "gaussian", "laplace"});
    c.martingale_tail.increments.kind = k == "rademacher" ? verify::IncrementKind::rademacher
                                        : k == "gaussian" ? verify::IncrementKind::gaussian
                                                          : verify::IncrementKind::laplace;
    c.martingale_tail.increments.scale = n.num("scale", 1.0);
    c.martingale_tail.increments.delta = n.num("delta", 0.0);
    c.martingale_tail.eps = n.num("eps", c.martingale_tail.eps);
    c.martingale_tail.n_grid = n.counts("n_grid", {});
    c.martingale_tail.M = n.count("M", 0);
    n.finish();
    if (!(c.martingale_tail.eps > 0.0 && c.martingale_tail.eps < 3.0)) {
      throw SchemaError("martingale_tail.eps", "must lie in (0, 3); the envelope is not established for eps >= 3");
    }
    if (!(c.martingale_tail.increments.scale > 0.0)) throw SchemaError("martingale_tail.scale", "must be > 0");
  }
  if (root.has("gaussian_perturbation")) {
    const auto n = root.child("gaussian_perturbation");
    c.gaussian_perturbation.betas = n.nums("betas", c.gaussian_perturbation.betas);
    c.gaussian_perturbation.etas = n.nums("etas", c.gaussian_perturbation.etas);
    n.finish();
    for (double b : c.gaussian_perturbation.betas) {
      if (!(b > 0.0)) throw SchemaError("gaussian_perturbation.betas", "entries must be > 0");
    }
    for (double e : c.gaussian_perturbation.etas) {
      if (!(e >= 0.0)) throw SchemaError("gaussian_perturbation.etas", "entries must be >= 0");
    }
  }
  root.finish();

  const bool exotic = c.model.type == "exotic_sign";
  for (const auto& k : c.checks) {
    if (k == "exotic" && !exotic) throw SchemaError("checks", "'exotic' requires model.type = exotic_sign");
    const bool needs_poisson = k == "poisson_oracle" || k == "covariance" || k == "telescoping" ||
                               k == "stochastic_exponential" || k == "dembo" || k == "geometric_noise";
    if (exotic && needs_poisson) {
      throw SchemaError("checks", "'" + k + "' needs a contracting chain; model.type is exotic_sign");
    }
    if (k == "exotic" && c.experiment.y_grid.empty()) throw SchemaError("experiment.y_grid", "required by 'exotic'");
  }
  if (c.experiment.lambda.size() > 0 && std::find(c.checks.begin(), c.checks.end(), "stochastic_exponential") != c.checks.end()) {
    const int p = c.observable.type == "linear" ? static_cast<int>(c.observable.C.rows())
                  : c.observable.type == "sign" ? 1
                                                : c.model.dim;
    if (c.experiment.lambda.size() != p) throw SchemaError("experiment.lambda", "dimension differs from the observable");
  }
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

chains::ChainModel build_model(const ModelConfig& m) {
  if (m.type == "linear_ar") return chains::ChainModel::linear_ar(m.A, m.noise);
  if (m.type == "scaled_tanh") return chains::ChainModel::scaled_tanh(m.c, m.dim, m.noise);
  if (m.type == "clipped_affine") return chains::ChainModel::clipped_affine(m.a, m.b, m.clip, m.dim, m.noise);
  if (m.type == "componentwise_sine") return chains::ChainModel::componentwise_sine(m.coeffs, m.noise);
  return chains::ChainModel::exotic_sign(m.m, m.noise);
}

ObservableSpec build_observable(const ObservableConfig& o, int dim) {
  if (o.type == "zero") return ObservableSpec::zero(dim);
  if (o.type == "identity") return ObservableSpec::identity(dim);
  if (o.type == "linear") return ObservableSpec::linear(o.C);
  if (o.type == "tanh") return ObservableSpec::tanh(dim);
  if (o.type == "sine") return ObservableSpec::sine(dim);
  return ObservableSpec::sign();
}

}  // namespace mdplab::cli
