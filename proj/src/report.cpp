#include "qgwnd/report.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "qgwnd/format.hpp"

#ifndef QGWND_BUILD_ID
#define QGWND_BUILD_ID "unknown"
#endif

namespace qgwnd {

std::string build_id() { return QGWND_BUILD_ID; }

Check make_check(std::string name, double value, double lower, double upper) {
  return Check{std::move(name), value, lower, upper, value >= lower && value <= upper};
}

bool ReportRecord::pass() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

void validate_record(const ReportRecord& record) {
  for (const auto& [k, v] : record.values)
    if (!std::isfinite(v)) throw std::runtime_error("record " + record.kind + ": value '" + k + "' is not finite");
  for (const auto& [k, v] : record.stderrs)
    if (!std::isfinite(v)) throw std::runtime_error("record " + record.kind + ": stderr '" + k + "' is not finite");
  for (const Check& c : record.checks) {
    if (!std::isfinite(c.value)) throw std::runtime_error("record " + record.kind + ": check '" + c.name + "' is not finite");
    if (c.pass != (c.value >= c.lower && c.value <= c.upper))
      throw std::runtime_error("record " + record.kind + ": check '" + c.name + "' pass flag disagrees with bounds");
  }
}

namespace {

// JSON has no infinity; unbounded sides are written as null.
nlohmann::json bound(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

double read_bound(const nlohmann::json& j, double inf) { return j.is_null() ? inf : j.get<double>(); }

}  // namespace

nlohmann::json to_json(const ReportRecord& r) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["parameters"] = r.parameters;
  j["values"] = r.values;
  j["stderr"] = r.stderrs;
  nlohmann::json checks = nlohmann::json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"lower", bound(c.lower)}, {"upper", bound(c.upper)},
                      {"pass", c.pass}});
  j["checks"] = checks;
  j["pass"] = r.pass();
  j["seed"] = r.seed;
  j["build_id"] = r.build;
  return j;
}

ReportRecord record_from_json(const nlohmann::json& j) {
  ReportRecord r;
  r.kind = j.at("kind").get<std::string>();
  r.parameters = j.value("parameters", nlohmann::json::object());
  r.values = j.value("values", std::map<std::string, double>{});
  r.stderrs = j.value("stderr", std::map<std::string, double>{});
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& c : j.value("checks", nlohmann::json::array()))
    r.checks.push_back(Check{c.at("name").get<std::string>(), c.at("value").get<double>(), read_bound(c.at("lower"), -inf),
                             read_bound(c.at("upper"), inf), c.at("pass").get<bool>()});
  r.seed = j.value("seed", std::uint64_t{0});
  r.build = j.value("build_id", std::string());
  return r;
}

void write_series_csv(std::ostream& out, const Series& s) {
  for (std::size_t i = 0; i < s.columns.size(); ++i) out << (i ? "," : "") << s.columns[i];
  out << '\n';
  for (const auto& row : s.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_run(const std::filesystem::path& dir, const std::string& kind, const std::vector<ReportRecord>& records,
               const std::vector<Series>& series) {
  std::filesystem::create_directories(dir);
  nlohmann::json all = nlohmann::json::array();
  for (const ReportRecord& r : records) {
    validate_record(r);
    all.push_back(to_json(r));
  }
  {
    std::ofstream out(dir / (kind + ".json"));
    if (!out) throw std::runtime_error("cannot write " + (dir / (kind + ".json")).string());
    out << all.dump(2) << '\n';
  }
  for (const Series& s : series) {
    std::ofstream out(dir / (kind + "_" + s.name + ".csv"));
    if (!out) throw std::runtime_error("cannot write series " + s.name);
    write_series_csv(out, s);
  }
}

}  // namespace qgwnd
