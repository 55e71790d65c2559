#include "qgwnd/config.hpp"

#include <cmath>
#include <fstream>

namespace qgwnd {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_table() {
  static const std::vector<std::pair<ExperimentKind, std::string>> table = {
      {ExperimentKind::spectrum, "spectrum"},
      {ExperimentKind::propagate, "propagate"},
      {ExperimentKind::decay_fit, "decay_fit"},
      {ExperimentKind::strichartz, "strichartz"},
      {ExperimentKind::nlse_wnd, "nlse_wnd"},
      {ExperimentKind::nlse_random, "nlse_random"},
      {ExperimentKind::invariance, "invariance"},
      {ExperimentKind::converge_eps, "converge_eps"},
      {ExperimentKind::driver_continuity, "driver_continuity"},
      {ExperimentKind::star_formula, "star_formula"},
  };
  return table;
}

double number_or_inf(const nlohmann::json& v, const std::string& field) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError(field + ": expected a number or \"inf\"");
  }
  if (!v.is_number()) throw ConfigError(field + ": expected a number");
  return v.get<double>();
}

cd complex_entry(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError("matrix entry must be a number or [re, im]");
}

CMatrix parse_matrix(const nlohmann::json& rows, int degree, const std::string& name) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != degree)
    throw ConfigError("custom coupling: " + name + " must have " + std::to_string(degree) + " rows");
  CMatrix M(degree, degree);
  for (int i = 0; i < degree; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != degree)
      throw ConfigError("custom coupling: " + name + " rows must have " + std::to_string(degree) + " entries");
    for (int j = 0; j < degree; ++j) M(i, j) = complex_entry(row[static_cast<std::size_t>(j)]);
  }
  return M;
}

void require(const nlohmann::json& params, std::initializer_list<const char*> keys, const std::string& kind) {
  for (const char* k : keys)
    if (!params.contains(k)) throw ConfigError("kind '" + kind + "' requires params." + k);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_table())
    if (k == kind) return name;
  return "spectrum";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kind_table())
    if (n == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

const std::vector<std::string>& experiment_kind_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : kind_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

SolverConfig parse_solver(const nlohmann::json& s) {
  SolverConfig cfg;
  if (s.is_null()) return cfg;
  if (!s.is_object()) throw ConfigError("solver must be an object");
  cfg.sigma = s.value("sigma", cfg.sigma);
  cfg.dt = s.value("dt", cfg.dt);
  cfg.T = s.value("T", cfg.T);
  if (s.contains("r")) cfg.r = number_or_inf(s.at("r"), "solver.r");
  cfg.p = s.value("p", cfg.p);
  cfg.seed = s.value("seed", cfg.seed);
  if (s.contains("scheme")) cfg.scheme = scheme_from_string(s.at("scheme").get<std::string>());
  cfg.strang = s.value("strang", cfg.strang);
  cfg.nonlinearity = s.value("nonlinearity", cfg.nonlinearity);
  cfg.save_every = s.value("save_every", cfg.save_every);
  cfg.blowup_factor = s.value("blowup_factor", cfg.blowup_factor);
  if (s.contains("truncation")) {
    const auto& t = s.at("truncation");
    cfg.truncation.kind = truncation_from_string(t.value("kind", std::string("none")));
    if (t.contains("R")) cfg.truncation.R = number_or_inf(t.at("R"), "solver.truncation.R");
  }
  return cfg;
}

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  try {
    cfg.kind = experiment_kind_from_string(doc.at("kind").get<std::string>());
    cfg.graph = doc.value("graph", nlohmann::json{{"factory", "star"}, {"n", 3}});
    cfg.couplings = doc.value("couplings", nlohmann::json{{"default", {{"kind", "kirchhoff"}}}});
    if (doc.contains("mesh")) {
      const auto& m = doc.at("mesh");
      cfg.mesh.h = m.value("h", cfg.mesh.h);
      cfg.mesh.L_trunc = m.value("L_trunc", cfg.mesh.L_trunc);
      const std::string far = m.value("far_end", std::string("dirichlet"));
      if (far == "dirichlet") cfg.mesh.far_end = FarEnd::dirichlet;
      else if (far == "neumann") cfg.mesh.far_end = FarEnd::neumann;
      else throw ConfigError("mesh.far_end must be dirichlet or neumann");
      if (m.contains("edge_h"))
        for (const auto& [k, v] : m.at("edge_h").items()) cfg.mesh.edge_h[std::stoul(k)] = v.get<double>();
    }
    cfg.solver = parse_solver(doc.value("solver", nlohmann::json()));
    cfg.initial = doc.value("initial", nlohmann::json{{"type", "gaussian"}});
    const long long trials = doc.value("trials", 1LL);
    if (trials < 1) throw ConfigError("trials must be at least 1");
    cfg.trials = static_cast<std::size_t>(trials);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.output = doc.value("output", std::string());
    cfg.params = doc.value("params", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!(cfg.mesh.h > 0.0)) throw ConfigError("mesh.h must be positive");
  if (cfg.graph.contains("file")) {
    const std::filesystem::path p = base_dir / cfg.graph.at("file").get<std::string>();
    if (!std::filesystem::exists(p)) throw ConfigError("graph file not found: " + p.string());
  }
  const std::string kind = to_string(cfg.kind);
  switch (cfg.kind) {
    case ExperimentKind::propagate: require(cfg.params, {"t"}, kind); break;
    case ExperimentKind::decay_fit: require(cfg.params, {"t_min", "t_max", "points"}, kind); break;
    case ExperimentKind::strichartz: require(cfg.params, {"r", "p", "T_list"}, kind); break;
    case ExperimentKind::nlse_random: require(cfg.params, {"eps", "gamma", "s"}, kind); break;
    case ExperimentKind::invariance: require(cfg.params, {"eps_list", "gamma", "s"}, kind); break;
    case ExperimentKind::converge_eps: require(cfg.params, {"eps_list", "gamma", "s"}, kind); break;
    case ExperimentKind::driver_continuity: require(cfg.params, {"widths"}, kind); break;
    case ExperimentKind::star_formula: require(cfg.params, {"h_list", "t"}, kind); break;
    case ExperimentKind::spectrum:
    case ExperimentKind::nlse_wnd: break;
  }
  if (cfg.kind != ExperimentKind::spectrum && cfg.kind != ExperimentKind::invariance &&
      cfg.kind != ExperimentKind::star_formula && cfg.kind != ExperimentKind::propagate &&
      cfg.kind != ExperimentKind::decay_fit && cfg.kind != ExperimentKind::strichartz)
    validate(cfg.solver);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + file.string() + ": " + e.what());
  }
  return parse_config(doc, file.parent_path());
}

std::shared_ptr<const MetricGraph> config_graph(const ExperimentConfig& cfg) {
  if (cfg.graph.contains("file")) {
    const std::filesystem::path p = cfg.base_dir / cfg.graph.at("file").get<std::string>();
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open graph file " + p.string());
    nlohmann::json doc;
    in >> doc;
    return std::make_shared<const MetricGraph>(build_graph(doc));
  }
  try {
    return std::make_shared<const MetricGraph>(build_graph(cfg.graph));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("graph: ") + e.what());
  }
}

VertexCoupling parse_coupling(const nlohmann::json& node, int degree) {
  try {
    const CouplingKind kind = coupling_kind_from_string(node.value("kind", std::string("kirchhoff")));
    switch (kind) {
      case CouplingKind::kirchhoff:
      case CouplingKind::dirichlet: return standard_coupling(kind, degree);
      case CouplingKind::delta: return standard_coupling(kind, degree, node.value("alpha", node.value("parameter", 0.0)));
      case CouplingKind::delta_prime:
        return standard_coupling(kind, degree, node.value("beta", node.value("parameter", 0.0)));
      case CouplingKind::custom:
        return VertexCoupling(parse_matrix(node.at("A"), degree, "A"), parse_matrix(node.at("B"), degree, "B"),
                              CouplingKind::custom);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("coupling: ") + e.what());
  }
  throw ConfigError("coupling: unsupported kind");
}

std::vector<VertexCoupling> config_couplings(const MetricGraph& graph, const nlohmann::json& node) {
  const nlohmann::json def = node.value("default", nlohmann::json{{"kind", "kirchhoff"}});
  const nlohmann::json per = node.value("vertices", nlohmann::json::object());
  for (const auto& [key, value] : per.items()) {
    (void)value;
    try {
      graph.vertex_index(std::stoi(key));
    } catch (const std::exception&) {
      throw ConfigError("couplings.vertices names unknown vertex '" + key + "'");
    }
  }
  std::vector<VertexCoupling> out;
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) {
    const std::string key = std::to_string(graph.vertex_ids()[v]);
    const nlohmann::json& c = per.contains(key) ? per.at(key) : def;
    out.push_back(parse_coupling(c, static_cast<int>(graph.degree(v))));
  }
  return out;
}

GridFunction build_initial(std::shared_ptr<const Mesh> mesh, const nlohmann::json& node,
                           const std::vector<VertexCoupling>& couplings) {
  const std::string type = node.value("type", std::string("gaussian"));
  if (type == "zero") return GridFunction(mesh);
  if (type == "gaussian") {
    const double a = node.value("amplitude", 1.0);
    const double w = node.value("width", 1.0);
    const double c = node.value("center", 0.0);
    const double k = node.value("momentum", 0.0);
    if (!(w > 0.0)) throw ConfigError("initial.width must be positive");
    std::vector<bool> on(mesh->edges().size(), !node.contains("edges"));
    if (node.contains("edges"))
      for (std::size_t e : node.at("edges").get<std::vector<std::size_t>>()) {
        if (e >= on.size()) throw ConfigError("initial.edges names edge " + std::to_string(e) + " out of range");
        on[e] = true;
      }
    return GridFunction::sample(mesh, [&](std::size_t e, double x) {
      if (!on[e]) return cd(0.0, 0.0);
      const double z = (x - c) / w;
      return a * std::exp(-z * z) * std::polar(1.0, k * x);
    });
  }
  if (type == "star_flat") {
    if (couplings.empty()) throw ConfigError("star_flat datum needs a vertex coupling");
    const VertexCoupling& vc = couplings.front();
    const double S = node.value("scale", 1.0);
    const std::vector<double> coeffs = node.value("coeffs", std::vector<double>{0.5, -0.3, 0.8});
    if (coeffs.size() < mesh->edges().size()) throw ConfigError("star_flat needs one coefficient per edge");
    const bool dirichlet = vc.projectors().P_D.norm() > 1e-10;
    const double b = vc.delta_strength().value_or(0.0) / static_cast<double>(vc.degree());
    return GridFunction::sample(mesh, [&](std::size_t e, double x) {
      const double x6 = std::pow(x / S, 6);
      const double base = dirichlet ? 0.0 : std::exp(b * x - x6);
      return cd(base + coeffs[e] * x6 * std::exp(-0.5 * x * x), 0.0);
    });
  }
  throw ConfigError("unknown initial datum type '" + type + "'");
}

}  // namespace qgwnd
