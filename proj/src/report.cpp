#include "mdplab/report.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>

namespace mdplab::cli {

namespace {

void escape(std::string& out, const std::string& s) {
  out += '"';
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

void dump(std::string& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        escape(out, it.key());
        out += ": ";
        dump(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad_in;
        dump(out, e, indent + 1);
      }
      out += flat ? "]" : "\n" + pad + "]";
      return;
    }
    case Json::value_t::string: escape(out, j.get_ref<const std::string&>()); return;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; return;
    case Json::value_t::number_integer: out += std::to_string(j.get<long long>()); return;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<unsigned long long>()); return;
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    case Json::value_t::null:
    case Json::value_t::discarded:
    case Json::value_t::binary: out += "null"; return;
  }
}

std::string csv_field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep the value a JSON float when it happens to be integral.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

Json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw SchemaError("", "expected a number in stored results");
}

std::string dump_json(const Json& j) {
  std::string out;
  dump(out, j, 0);
  out += '\n';
  return out;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v(i)));
  return a;
}

Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(number_to_json(m(i, j)));
    a.push_back(std::move(r));
  }
  return a;
}

Json to_json(const poisson::CovarianceEstimate& c) {
  Json j;
  j["method"] = poisson::to_string(c.method);
  j["B_hat"] = to_json(c.B_hat);
  j["se"] = to_json(c.se);
  j["n_or_N"] = c.n_or_N;
  j["M"] = c.M;
  j["seed"] = c.seed;
  j["truncation_bound"] = number_to_json(c.truncation_bound);
  j["psd_ok"] = c.psd_ok();
  return j;
}

Json to_json(const ratefn::RateFunction& rf) {
  Json j;
  j["B"] = to_json(rf.B);
  j["eigenvalues"] = to_json(rf.eigvals);
  j["eigenvectors"] = to_json(rf.T);
  j["cutoff"] = number_to_json(rf.cutoff);
  j["cutoff_mode"] = rf.mode == ratefn::CutoffMode::exact ? "exact" : "statistical";
  j["rank"] = rf.rank;
  j["pseudoinverse"] = to_json(rf.B_pinv);
  j["range_projector"] = to_json(rf.range_projector);
  j["range_tol"] = number_to_json(rf.range_tol);
  return j;
}

Json to_json(const Results& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = r.seed;
  j["config"] = r.config;
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cj;
    cj["check_id"] = c.id;
    cj["hard_pass"] = c.hard_pass;
    cj["soft_pass"] = c.soft_pass;
    cj["notes"] = c.notes;
    cj["detail"] = c.detail;
    Json rows = Json::array();
    for (const auto& row : c.rows) {
      Json rj;
      rj["n"] = row.n;
      rj["alpha"] = number_to_json(row.alpha);
      rj["quantity"] = row.quantity;
      rj["value"] = number_to_json(row.value);
      rj["ci_lo"] = number_to_json(row.ci_lo);
      rj["ci_hi"] = number_to_json(row.ci_hi);
      rj["envelope"] = number_to_json(row.envelope);
      rows.push_back(std::move(rj));
    }
    cj["rows"] = std::move(rows);
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  return j;
}

Results results_from_json(const Json& j) {
  Results r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto& cj : j.at("checks")) {
      CheckResult c;
      c.id = cj.at("check_id").get<std::string>();
      c.hard_pass = cj.at("hard_pass").get<bool>();
      c.soft_pass = cj.at("soft_pass").get<bool>();
      c.notes = cj.at("notes").get<std::vector<std::string>>();
      c.detail = cj.at("detail");
      for (const auto& rj : cj.at("rows")) {
        Row row;
        row.n = rj.at("n").get<std::size_t>();
        row.alpha = number_from_json(rj.at("alpha"));
        row.quantity = rj.at("quantity").get<std::string>();
        row.value = number_from_json(rj.at("value"));
        row.ci_lo = number_from_json(rj.at("ci_lo"));
        row.ci_hi = number_from_json(rj.at("ci_hi"));
        row.envelope = number_from_json(rj.at("envelope"));
        c.rows.push_back(std::move(row));
      }
      r.checks.push_back(std::move(c));
    }
  } catch (const Json::exception& e) {
    throw SchemaError("results", e.what());
  }
  return r;
}

std::string to_csv(const Results& r) {
  std::ostringstream os;
  os << kCsvComment << '\n' << "n,alpha,quantity,value,ci_lo,ci_hi,envelope\n";
  for (const auto& c : r.checks) {
    for (const auto& row : c.rows) {
      os << row.n << ',' << csv_field(row.alpha) << ',' << csv_text(c.id + ":" + row.quantity) << ','
         << csv_field(row.value) << ',' << csv_field(row.ci_lo) << ',' << csv_field(row.ci_hi) << ','
         << csv_field(row.envelope) << '\n';
    }
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace mdplab::cli
