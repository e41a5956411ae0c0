#pragma once
// Executes the checks of a run configuration and collects their results.

#include "mdplab/config.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/report.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mdplab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitSchema = 2, kExitAdmissibility = 3, kExitIo = 4 };

enum class Format { json, csv, both };

struct CheckTiming {
  std::string id;
  double seconds = 0.0;
  std::size_t replications = 0;
};

struct RunOutput {
  Results results;
  std::vector<CheckTiming> timings;
};

/// Build the model (admissibility gates fire here) and run every requested
/// check in order. Numbers depend only on the configuration and its seed.
RunOutput run_checks(const RunConfig& cfg, kernels::Exec exec = {});

/// 0 when every check passes, 1 otherwise.
int exit_code_for(const Results& r);

struct ManifestInput {
  std::string config_path;
  std::uint64_t seed = 0;
  std::vector<std::string> checks;
  std::string json_path;  ///< empty when not written
  std::string csv_path;
  bool dry_run = false;
  std::vector<CheckTiming> timings;
  double wall_seconds = 0.0;
};

Json make_manifest(const ManifestInput& in);

/// Write report.json / report.csv under out_dir; returns their paths (empty if skipped).
std::pair<std::string, std::string> emit_report(const Results& r, const std::string& out_dir, Format format);

}  // namespace mdplab::cli
