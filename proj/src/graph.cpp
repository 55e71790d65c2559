#include "qgwnd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace qgwnd {

MetricGraph::MetricGraph(std::vector<int> vertex_ids, std::vector<Edge> edges)
    : vertex_ids_(std::move(vertex_ids)), edges_(std::move(edges)) {
  if (vertex_ids_.empty()) throw GraphError("graph has no vertices");
  {
    auto sorted = vertex_ids_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw GraphError("duplicate vertex id");
  }
  if (edges_.empty()) throw GraphError("graph has no edges");

  incident_.assign(vertex_ids_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    const std::size_t from = vertex_index(edge.from);
    incident_[from].push_back({e, true});
    if (!edge.external()) {
      if (!(edge.length > 0.0) || !std::isfinite(edge.length))
        throw GraphError("edge " + std::to_string(e) + " has nonpositive length");
      incident_[vertex_index(*edge.to)].push_back({e, false});
    }
  }

  // Connectivity by BFS over vertices.
  std::vector<std::vector<std::size_t>> adjacency(vertex_ids_.size());
  for (const Edge& edge : edges_) {
    if (edge.external()) continue;
    const auto a = vertex_index(edge.from);
    const auto b = vertex_index(*edge.to);
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
  std::vector<bool> seen(vertex_ids_.size(), false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop();
    for (auto w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw GraphError("graph is disconnected");
  for (std::size_t v = 0; v < incident_.size(); ++v)
    if (incident_[v].empty()) throw GraphError("vertex " + std::to_string(vertex_ids_[v]) + " has no edges");
}

std::size_t MetricGraph::num_external() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.external(); }));
}

std::size_t MetricGraph::vertex_index(int id) const {
  const auto it = std::find(vertex_ids_.begin(), vertex_ids_.end(), id);
  if (it == vertex_ids_.end()) throw GraphError("edge endpoint references unknown vertex " + std::to_string(id));
  return static_cast<std::size_t>(it - vertex_ids_.begin());
}

double MetricGraph::shortest_internal_length() const {
  double shortest = std::numeric_limits<double>::infinity();
  for (const Edge& e : edges_)
    if (!e.external()) shortest = std::min(shortest, e.length);
  return shortest;
}

bool MetricGraph::is_star() const { return num_vertices() == 1 && num_internal() == 0; }

MetricGraph make_star(int n) {
  if (n < 1) throw GraphError("star graph needs at least one edge");
  std::vector<Edge> edges(static_cast<std::size_t>(n), Edge{0, std::nullopt, 0.0});
  return MetricGraph({0}, std::move(edges));
}

MetricGraph make_line_with_defects(const std::vector<double>& positions) {
  if (positions.empty()) throw GraphError("line needs at least one defect point");
  for (std::size_t i = 1; i < positions.size(); ++i)
    if (!(positions[i] > positions[i - 1])) throw GraphError("defect positions must be strictly increasing");
  const int p = static_cast<int>(positions.size());
  std::vector<int> ids(positions.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<Edge> edges;
  edges.push_back({0, std::nullopt, 0.0});
  for (int i = 0; i + 1 < p; ++i)
    edges.push_back({i, i + 1, positions[static_cast<std::size_t>(i + 1)] - positions[static_cast<std::size_t>(i)]});
  edges.push_back({p - 1, std::nullopt, 0.0});
  return MetricGraph(std::move(ids), std::move(edges));
}

MetricGraph make_binary_tree(int depth, double edge_length) {
  if (depth < 0) throw GraphError("tree depth must be nonnegative");
  const int count = (1 << (depth + 1)) - 1;
  std::vector<int> ids(static_cast<std::size_t>(count));
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<Edge> edges;
  edges.push_back({0, std::nullopt, 0.0});  // trunk
  for (int v = 1; v < count; ++v) edges.push_back({(v - 1) / 2, v, edge_length});
  for (int v = (1 << depth) - 1; v < count; ++v) edges.push_back({v, std::nullopt, 0.0});
  return MetricGraph(std::move(ids), std::move(edges));
}

MetricGraph build_graph(const nlohmann::json& node) {
  if (node.contains("factory")) {
    const std::string kind = node.at("factory").get<std::string>();
    if (kind == "star") return make_star(node.at("n").get<int>());
    if (kind == "line_defects") {
      if (node.contains("points")) return make_line_with_defects(node.at("points").get<std::vector<double>>());
      const double a = node.at("a").get<double>();
      return make_line_with_defects({-a, a});
    }
    if (kind == "tree") return make_binary_tree(node.at("depth").get<int>(), node.value("edge_length", 1.0));
    throw GraphError("unknown graph factory '" + kind + "'");
  }
  std::vector<int> ids = node.at("vertices").get<std::vector<int>>();
  std::vector<Edge> edges;
  for (const auto& item : node.at("edges")) {
    Edge e;
    e.from = item.at("from").get<int>();
    const auto& length = item.at("length");
    if (length.is_string()) {
      if (length.get<std::string>() != "external") throw GraphError("edge length must be a number or \"external\"");
      if (item.contains("to")) throw GraphError("external edge must not name a 'to' vertex");
    } else {
      e.length = length.get<double>();
      e.to = item.at("to").get<int>();
    }
    edges.push_back(e);
  }
  return MetricGraph(std::move(ids), std::move(edges));
}

}  // namespace qgwnd
