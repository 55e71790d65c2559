#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qgwnd/config.hpp"
#include "qgwnd/experiments.hpp"
#include "qgwnd/report.hpp"
#include "qgwnd/statistics.hpp"

using namespace qgwnd;
using nlohmann::json;

namespace {

const ReportRecord& first_with(const ExperimentResult& r, const std::string& value) {
  for (const auto& rec : r.records)
    if (rec.values.count(value)) return rec;
  throw std::runtime_error("no record with value " + value);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json star_base(const std::string& kind) {
  return {{"kind", kind},
          {"graph", {{"factory", "star"}, {"n", 3}}},
          {"couplings", {{"default", {{"kind", "kirchhoff"}}}}},
          {"mesh", {{"h", 0.2}, {"L_trunc", 6.0}}},
          {"initial", {{"type", "gaussian"}, {"amplitude", 1.0}, {"width", 1.0}}}};
}

json small_wnd() {
  json j = star_base("nlse_wnd");
  j["solver"] = {{"sigma", 1.0}, {"dt", 1e-2}, {"T", 0.2}};
  j["trials"] = 6;
  j["seed"] = 99;
  return j;
}

struct ScopedEnv {
  std::string name;
  ScopedEnv(const char* n, const char* value) : name(n) { setenv(n, value, 1); }
  ~ScopedEnv() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("fit_decay_slope") {
    std::vector<double> t, y, c;
    for (int k = 0; k < 8; ++k) {
      t.push_back(0.5 + 0.6 * k);
      y.push_back(std::pow(t.back(), -0.5));
      c.push_back(3.0);
    }
    CHECK(std::abs(fit_decay_slope(t, y).slope + 0.5) <= 1e-12);
    CHECK(std::abs(fit_decay_slope(t, c).slope) <= 1e-12);
    CHECK_THROWS_AS(fit_decay_slope({1, 2, 3, 4}, {1, 2, 3, 4}), StatisticsError);
    CHECK_THROWS_AS(fit_decay_slope({1, 2, 3, 4, 5}, {1, 2, -3, 4, 5}), StatisticsError);
    CHECK_THROWS_AS(fit_decay_slope({1, 1, 1, 1, 1}, {1, 2, 3, 4, 5}), StatisticsError);
    const SlopeFit line = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(line.slope == doctest::Approx(2.0));
    CHECK(line.intercept == doctest::Approx(1.0));
  }

  TEST_CASE("ks_distance") {
    CHECK(ks_distance({1, 2, 3, 4}, {4, 3, 2, 1}) == 0.0);
    CHECK(ks_distance({1, 2, 3}, {10, 11}) == 1.0);
    CHECK(ks_distance({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_distance({}, {1.0}), StatisticsError);
  }

  TEST_CASE("estimates and orders") {
    const Estimate m = mean_estimate({1, 2, 3, 4});
    CHECK(m.value == 2.5);
    CHECK(m.stderr_value == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(variance_estimate({1, 2, 3, 4}).value == doctest::Approx(5.0 / 3.0));
    const auto orders = observed_orders({1.0, 0.25, 0.0625});
    CHECK(orders[0] == doctest::Approx(2.0));
    CHECK(orders[1] == doctest::Approx(2.0));
    CHECK(count_non_decreases({3, 2, 1}) == 0);
    CHECK(count_non_decreases({3, 3, 1, 2}) == 2);
  }

  TEST_CASE("Strichartz exponent") {
    CHECK(strichartz_beta(4, 4) == doctest::Approx(3.0 / 8.0));
    CHECK(strichartz_beta(std::numeric_limits<double>::infinity(), 2) == 0.0);
  }

  TEST_CASE("seeds") {
    CHECK(trial_seed(1, 0) == trial_seed(1, 0));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
  }

  TEST_CASE("parallel_map keeps index order and forwards errors") {
    const auto out = parallel_map<std::size_t>(100, [](std::size_t i) { return i * i; }, 4);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    CHECK_THROWS_AS(parallel_map<int>(10, [](std::size_t i) -> int {
                      if (i == 7) throw std::runtime_error("seven");
                      return 0;
                    }, 3),
                    std::runtime_error);
    ScopedEnv env("QGWND_THREADS", "2");
    CHECK(worker_count(10) == 2);
    CHECK(worker_count(1) == 1);
  }

  TEST_CASE("spectrum record") {
    json j = star_base("spectrum");
    j["couplings"] = {{"default", {{"kind", "delta"}, {"alpha", -1.0}}}};
    j["mesh"] = {{"h", 0.02}, {"L_trunc", 40.0}};
    j["params"] = {{"expected_lambda", -1.0 / 9.0}, {"lambda_tol", 5e-3}, {"expected_negative", 1}};
    const ExperimentResult r = run_experiment(parse_config(j));
    const ReportRecord& rec = r.records.at(0);
    CHECK(rec.values.at("n_neg_predicted") == 1.0);
    CHECK(rec.values.at("n_neg_discrete") == 1.0);
    CHECK(std::abs(rec.values.at("lambda_min") + 1.0 / 9.0) <= 5e-3);
    CHECK(r.pass());
  }

  TEST_CASE("propagate at t = 0 returns the input") {
    json j = star_base("propagate");
    j["params"] = {{"t", 0.0}};
    const ExperimentResult r = run_experiment(parse_config(j));
    CHECK(r.records.at(0).values.at("sup_change") == 0.0);
    const Series& field = r.series.at(0);
    for (const auto& row : field.rows) {
      CHECK(row[3] == row[5]);
      CHECK(row[4] == row[6]);
    }
  }

  TEST_CASE("propagate conserves the projected L2 norm") {
    json j = star_base("propagate");
    j["params"] = {{"t", 1.5}};
    CHECK(run_experiment(parse_config(j)).pass());
  }

  TEST_CASE("invariance with zero dispersion") {
    const json j = {{"kind", "invariance"},
                    {"trials", 20},
                    {"params", {{"process", "zero"}, {"eps_list", {0.3, 0.1}}, {"gamma", 1.0}, {"s", 1.0}}}};
    const ExperimentResult r = run_experiment(parse_config(j));
    for (const auto& rec : r.records)
      if (rec.values.count("variance")) CHECK(rec.values.at("variance") == 0.0);
    CHECK(r.pass());
  }

  TEST_CASE("standard error halves with four times the trials") {
    auto stderr_for = [](std::size_t trials) {
      const json j = {{"kind", "invariance"},
                      {"trials", trials},
                      {"seed", 5},
                      {"params", {{"process", "ou"}, {"eps_list", {0.3}}, {"gamma", 1.0}, {"s", 1.0}}}};
      return first_with(run_experiment(parse_config(j)), "variance_naive").stderrs.at("variance_naive");
    };
    const double ratio = stderr_for(400) / stderr_for(1600);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.5);
  }

  TEST_CASE("converge_eps with generous truncation never stops") {
    json j = star_base("converge_eps");
    j["solver"] = {{"sigma", 1.0}, {"dt", 1e-2}, {"T", 0.1}, {"truncation", {{"kind", "norm"}, {"R", 50.0}}}, {"r", 4}, {"p", 4}};
    j["trials"] = 10;
    j["params"] = {{"eps_list", {0.3, 0.1}}, {"gamma", 1.0}, {"s", 1.0}};
    const ExperimentResult r = run_experiment(parse_config(j));
    for (const auto& rec : r.records)
      if (rec.values.count("stop_fraction")) CHECK(rec.values.at("stop_fraction") == 0.0);
  }

  TEST_CASE("bit-reproducible output") {
    const auto base = std::filesystem::temp_directory_path() / "qgwnd_repro";
    std::filesystem::remove_all(base);
    for (const char* run : {"a", "b"}) {
      ExperimentConfig cfg = parse_config(small_wnd());
      cfg.output = (base / run).string();
      run_experiment(cfg);
    }
    for (const char* f : {"nlse_wnd.json", "nlse_wnd_trajectory.csv"}) {
      const std::string a = slurp(base / "a" / f), b = slurp(base / "b" / f);
      CHECK_FALSE(a.empty());
      CHECK(a == b);
    }
    std::filesystem::remove_all(base);
  }

  TEST_CASE("worker count does not change results") {
    json j = star_base("strichartz");
    j["trials"] = 12;
    j["seed"] = 4;
    j["params"] = {{"r", 4}, {"p", 4}, {"T_list", {0.5, 1.0}}, {"dt", 0.05}};
    auto run = [&](const char* threads) {
      ScopedEnv env("QGWND_THREADS", threads);
      return run_experiment(parse_config(j));
    };
    const ExperimentResult one = run("1"), three = run("3");
    REQUIRE(one.records.size() == three.records.size());
    for (std::size_t i = 0; i < one.records.size(); ++i)
      for (const auto& [k, v] : one.records[i].values) CHECK(std::abs(three.records[i].values.at(k) - v) <= 1e-9 * (1.0 + std::abs(v)));
  }

  TEST_CASE("record JSON round trip and validation") {
    ReportRecord r;
    r.kind = "spectrum";
    r.seed = 12;
    r.set("lambda_min", -0.11, 0.001);
    r.check("bounded", 0.5, 0.0, 1.0);
    r.check("one_sided", 3.0, 1.0, std::numeric_limits<double>::infinity());
    const json j = to_json(r);
    CHECK(j.at("checks").at(1).at("upper").is_null());
    const ReportRecord back = record_from_json(json::parse(j.dump()));
    CHECK(back.kind == r.kind);
    CHECK(back.seed == 12);
    CHECK(back.values == r.values);
    CHECK(back.stderrs == r.stderrs);
    REQUIRE(back.checks.size() == 2);
    CHECK(std::isinf(back.checks[1].upper));
    CHECK(back.pass());
    CHECK_NOTHROW(validate_record(back));
    // Pass flags can be re-derived from the stored numbers.
    for (const Check& c : back.checks) CHECK(c.pass == (c.lower <= c.value && c.value <= c.upper));

    ReportRecord bad = r;
    bad.set("broken", std::nan(""));
    CHECK_THROWS(validate_record(bad));
    ReportRecord lying = r;
    lying.checks[0].pass = false;
    CHECK_THROWS(validate_record(lying));
    CHECK_FALSE(make_check("x", 2.0, 0.0, 1.0).pass);
  }

  TEST_CASE("config errors") {
    json j = small_wnd();
    j["trials"] = 0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"kind", "warp"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"kind", "propagate"}, {"graph", {{"factory", "star"}, {"n", 3}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"kind", "spectrum"}, {"graph", {{"file", "/nonexistent/graph.json"}}}}), ConfigError);
    j = small_wnd();
    j["solver"]["r"] = 8;
    j["solver"]["p"] = 8;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_wnd();
    j["solver"]["truncation"] = {{"kind", "sideways"}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    CHECK_THROWS_AS(parse_coupling(json{{"kind", "custom"}, {"A", {{1}}}, {"B", {{0}}}}, 2), ConfigError);
  }

  TEST_CASE("custom couplings and graph files") {
    const VertexCoupling c = parse_coupling(
        json{{"kind", "custom"}, {"A", {{1, -1}, {0, 0}}}, {"B", {{0, 0}, {{1, 0}, {1, 0}}}}}, 2);
    CHECK((c.canonical_A() - standard_coupling(CouplingKind::kirchhoff, 2).canonical_A()).norm() < 1e-12);
    const auto dir = std::filesystem::temp_directory_path() / "qgwnd_graph_file";
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "g.json");
      out << R"({"factory": "star", "n": 2})";
    }
    json j = star_base("spectrum");
    j["graph"] = {{"file", "g.json"}};
    j["couplings"] = {{"default", {{"kind", "dirichlet"}}}, {"vertices", {{"0", {{"kind", "delta"}, {"alpha", -2.0}}}}}};
    const ExperimentConfig cfg = parse_config(j, dir);
    const auto graph = config_graph(cfg);
    CHECK(graph->num_edges() == 2);
    const auto couplings = config_couplings(*graph, cfg.couplings);
    REQUIRE(couplings.size() == 1);
    CHECK(couplings[0].kind() == CouplingKind::delta);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("write_run layout") {
    const auto dir = std::filesystem::temp_directory_path() / "qgwnd_write_run";
    std::filesystem::remove_all(dir);
    ReportRecord r;
    r.kind = "decay_fit";
    r.set("slope", -0.5, 0.01);
    write_run(dir, "decay_fit", {r}, {Series{"decay", {"t", "value", "stderr"}, {{1.0, 0.5, 0.0}}}});
    CHECK(std::filesystem::exists(dir / "decay_fit.json"));
    CHECK(slurp(dir / "decay_fit_decay.csv") == "t,value,stderr\n1,0.5,0\n");
    std::filesystem::remove_all(dir);
  }
}
