// mdplab: config-driven runner for the moderate deviation checks.

#include "mdplab/config.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/poisson.hpp"
#include "mdplab/ratefn.hpp"
#include "mdplab/report.hpp"
#include "mdplab/runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace mdplab;
using namespace mdplab::cli;

namespace {

Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  return Format::both;
}

// Stationary covariance of X_n = A X_{n-1} + xi_n: sum_k A^k Q A^k*.
Mat stationary_covariance(const Mat& A, const Mat& Q) {
  Mat S = Q;
  Mat term = Q;
  for (int k = 0; k < 100000; ++k) {
    term = A * term * A.transpose();
    S += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-17 * S.cwiseAbs().maxCoeff()) break;
  }
  return S;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            bool dry_run, const std::string& format) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = load_config(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.experiment.seed = *seed;
  }
  ManifestInput man;
  man.config_path = config_path;
  man.seed = cfg.seed;
  man.checks = cfg.checks;
  man.dry_run = dry_run;
  int code = kExitPass;
  if (dry_run) {
    build_model(cfg.model);  // admissibility gates only
  } else {
    const auto out = run_checks(cfg);
    const auto paths = emit_report(out.results, out_dir, parse_format(format));
    man.json_path = paths.first;
    man.csv_path = paths.second;
    man.timings = out.timings;
    code = exit_code_for(out.results);
    for (const auto& c : out.results.checks) {
      std::cerr << c.id << ": " << (c.hard_pass ? "hard ok" : "hard FAIL") << ", "
                << (c.soft_pass ? "soft ok" : "soft FAIL") << "\n";
      for (const auto& n : c.notes) std::cerr << "  note: " << n << "\n";
    }
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  man.wall_seconds = dt.count();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  write_file((std::filesystem::path(out_dir) / "manifest.json").string(), dump_json(make_manifest(man)));
  return code;
}

int cmd_validate(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  std::cout << "ok: " << cfg.checks.size() << " check(s)";
  for (const auto& c : cfg.checks) std::cout << " " << c;
  std::cout << "\n";
  return kExitPass;
}

int cmd_oracle(const std::string& config_path) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = load_config(config_path);
  } else {
    cfg = parse_config(R"({"schema_version": 1})");
  }
  if (cfg.model.type != "linear_ar") throw SchemaError("model.type", "oracle values exist only for linear_ar");
  if (cfg.observable.type != "identity" && cfg.observable.type != "linear" && cfg.observable.type != "zero") {
    throw SchemaError("observable.type", "oracle values need a linear observable");
  }
  const auto model = build_model(cfg.model);
  const auto obs = center(build_observable(cfg.observable, model.dim()), model, 0);
  poisson::PoissonSolution U(model, obs);
  const Mat B = U.closed_form_B();
  const Mat Q = Mat::Identity(model.dim(), model.dim()) * component_variance(model.noise());

  Json j;
  j["model"] = model.describe();
  j["gain"] = to_json(U.gain());
  j["stationary_mean"] = to_json(U.stationary_mean());
  j["stationary_covariance"] = to_json(stationary_covariance(model.linear().A, Q));
  j["B"] = to_json(B);
  Json pts = Json::array();
  for (const auto& x : cfg.poisson.points) pts.push_back({{"x", to_json(x)}, {"U", to_json(U(x))}});
  j["U"] = std::move(pts);
  const auto rf = ratefn::build(B);
  std::vector<Vec> ys = cfg.rate_function.y;
  for (double y : cfg.experiment.y_grid) ys.push_back(Vec::Constant(obs.out_dim, y));
  if (ys.empty()) ys.push_back(Vec::Ones(obs.out_dim));
  Json rates = Json::array();
  for (const auto& y : ys) {
    if (y.size() != rf.dim()) throw SchemaError("rate_function.y", "dimension differs from B");
    rates.push_back({{"y", to_json(y)}, {"I", number_to_json(ratefn::rate(rf, y).as_double())}});
  }
  j["rate"] = std::move(rates);
  std::cout << dump_json(j);
  return kExitPass;
}

int cmd_report(const std::string& results_path, const std::string& out_dir, const std::string& format) {
  const auto text = read_file(results_path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(results_path, e.what());
  }
  const auto r = results_from_json(j);
  emit_report(r, out_dir, parse_format(format));
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::apply_worker_env();
  CLI::App app{"Monte Carlo and closed-form checks of moderate deviation bounds for Markov chains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string format = "both";
  std::string results_path;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;

  auto* run = app.add_subcommand("run", "Execute the checks of a configuration and write reports");
  run->add_option("--config", config_path, "Configuration file (JSON)")->required();
  run->add_option("--seed", seed, "Override the configured master seed");
  run->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  run->add_flag("--dry-run", dry_run, "Validate and write the manifest without simulating");
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "both"}))->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check a configuration against the schema");
  validate->add_option("--config", config_path, "Configuration file (JSON)")->required();

  auto* oracle = app.add_subcommand("oracle", "Print closed-form reference values for a linear Gaussian model");
  oracle->add_option("--config", config_path, "Configuration file; defaults to AR(1) a = 0.5, H(x) = x");

  auto* report = app.add_subcommand("report", "Re-emit reports from a stored report.json");
  report->add_option("--results", results_path, "Stored report.json")->required();
  report->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  report->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "both"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitSchema;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, dry_run, format);
    if (*validate) return cmd_validate(config_path);
    if (*oracle) return cmd_oracle(config_path);
    if (*report) return cmd_report(results_path, out_dir, format);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const AdmissibilityError& e) {
    std::cerr << "admissibility gate '" << e.gate() << "' failed: " << e.what() << "\n";
    return kExitAdmissibility;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitPass;
}
