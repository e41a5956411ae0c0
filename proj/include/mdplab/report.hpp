#pragma once

#include "mdplab/config.hpp"
#include "mdplab/poisson.hpp"
#include "mdplab/ratefn.hpp"

#include <string>
#include <vector>

namespace mdplab::cli {

/// One line of the flat table. NaN marks a missing entry.
struct Row {
  std::size_t n = 0;  ///< trajectory length; 0 where it does not apply
  double alpha = 0.0;
  std::string quantity;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double envelope = 0.0;
};

struct CheckResult {
  std::string id;
  bool hard_pass = true;  ///< deterministic invariants
  bool soft_pass = true;  ///< statistical checks
  std::vector<std::string> notes;
  Json detail = Json::object();
  std::vector<Row> rows;
};

struct Results {
  std::uint64_t seed = 0;
  Json config = Json::object();
  std::vector<CheckResult> checks;
};

Json to_json(const Results& r);
/// Inverse of to_json, for re-emitting stored results.
Results results_from_json(const Json& j);

/// Serialise with stable key order and doubles printed to 17 significant
/// digits. Non-finite doubles become the strings "nan", "inf", "-inf".
std::string dump_json(const Json& j);

/// Number or string-encoded non-finite value, as written by dump_json.
double number_from_json(const Json& j);
Json number_to_json(double v);

/// Comment line, header, then one line per row; the quantity column is
/// prefixed with the check id.
std::string to_csv(const Results& r);

inline constexpr const char* kCsvComment =
    "# columns: n = trajectory length (0 if not applicable); alpha = normalization exponent; "
    "quantity = check:name; value = estimate; ci_lo, ci_hi = 95% interval (empty if none); "
    "envelope = analytic bound or reference value (empty if none)";

std::string format_double(double v);

Json to_json(const poisson::CovarianceEstimate& c);
Json to_json(const ratefn::RateFunction& rf);
Json to_json(const Mat& m);
Json to_json(const Vec& v);

void write_file(const std::string& path, const std::string& content);

}  // namespace mdplab::cli
