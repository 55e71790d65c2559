#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace qgwnd {

/// Build identifier baked in at configure time (git describe when available).
std::string build_id();

struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
};

/// Check with pass = lower <= value <= upper.
Check make_check(std::string name, double value, double lower, double upper);

struct ReportRecord {
  std::string kind;
  nlohmann::json parameters = nlohmann::json::object();
  std::map<std::string, double> values;
  std::map<std::string, double> stderrs;
  std::vector<Check> checks;
  std::uint64_t seed = 0;
  std::string build = build_id();

  void set(const std::string& name, double value) { values[name] = value; }
  void set(const std::string& name, double value, double stderr_value) {
    values[name] = value;
    stderrs[name] = stderr_value;
  }
  void check(std::string name, double value, double lower, double upper) {
    checks.push_back(make_check(std::move(name), value, lower, upper));
  }
  bool pass() const;
};

/// Throws std::runtime_error when a stored number is not finite (bounds may
/// be infinite) or a pass flag disagrees with its bounds.
void validate_record(const ReportRecord& record);

nlohmann::json to_json(const ReportRecord& record);
ReportRecord record_from_json(const nlohmann::json& j);

/// Plot-ready series: one row per (x, value, stderr).
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_series_csv(std::ostream& out, const Series& series);

/// Writes <dir>/<kind>.json with every record and <dir>/<kind>_<series>.csv
/// for each series. Creates dir when needed.
void write_run(const std::filesystem::path& dir, const std::string& kind, const std::vector<ReportRecord>& records,
               const std::vector<Series>& series);

}  // namespace qgwnd
