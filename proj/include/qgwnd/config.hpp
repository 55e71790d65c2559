#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgwnd/coupling.hpp"
#include "qgwnd/graph.hpp"
#include "qgwnd/mesh.hpp"
#include "qgwnd/solver.hpp"

namespace qgwnd {

enum class ExperimentKind {
  spectrum,
  propagate,
  decay_fit,
  strichartz,
  nlse_wnd,
  nlse_random,
  invariance,
  converge_eps,
  driver_continuity,
  star_formula
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);
const std::vector<std::string>& experiment_kind_names();

/// Parsed experiment description. The layout is documented in
/// docs/config.schema.json.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::spectrum;
  nlohmann::json graph;      // inline description or {"file": path}
  nlohmann::json couplings;  // {"default": {...}, "vertices": {"<id>": {...}}}
  MeshOptions mesh;
  SolverConfig solver;
  nlohmann::json initial;  // initial datum
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string output;  // run directory; empty writes nothing
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path base_dir;  // relative file references resolve here
};

/// Validates and converts a JSON document. Throws ConfigError naming the
/// offending field.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

std::shared_ptr<const MetricGraph> config_graph(const ExperimentConfig& cfg);

/// One coupling per vertex. Each entry is
///   {"kind": "kirchhoff" | "dirichlet"}
///   {"kind": "delta", "alpha": a}
///   {"kind": "delta_prime", "beta": b}
///   {"kind": "custom", "A": [[...]], "B": [[...]]}
/// with custom matrix entries given as numbers or [re, im] pairs.
std::vector<VertexCoupling> config_couplings(const MetricGraph& graph, const nlohmann::json& node);
VertexCoupling parse_coupling(const nlohmann::json& node, int degree);

/// Initial datum on a mesh:
///   {"type": "zero"}
///   {"type": "gaussian", "amplitude": a, "width": w, "center": c, "momentum": k, "edges": [..]}
///     a exp(-((x - c) / w)^2) e^{ikx} on the listed edges (all when omitted)
///   {"type": "star_flat", "scale": S, "coeffs": [..]}
///     e^{bx - (x/S)^6} + c_e (x/S)^6 e^{-x^2/2} with b = alpha/n for a delta
///     coupling at vertex 0 (0 otherwise); the first term is dropped when the
///     vertex has a Dirichlet part. Both terms have vanishing derivative at 0.
GridFunction build_initial(std::shared_ptr<const Mesh> mesh, const nlohmann::json& node,
                           const std::vector<VertexCoupling>& couplings);

/// Parses a solver block; missing keys keep their defaults.
SolverConfig parse_solver(const nlohmann::json& node);

}  // namespace qgwnd
