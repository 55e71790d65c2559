#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qgwnd {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One edge of a metric graph. Internal edges carry a finite length and two
/// endpoints; external edges are half-lines [0, inf) attached at `from`.
struct Edge {
  int from = 0;
  std::optional<int> to;  // empty for external edges
  double length = 0.0;    // ignored for external edges

  bool external() const { return !to.has_value(); }
};

/// An end of an edge sitting at a vertex. `at_start` is true for the x = 0 end.
struct EdgeEnd {
  std::size_t edge = 0;
  bool at_start = true;
  bool operator==(const EdgeEnd&) const = default;
};

/// Finite metric graph (V, I u E, orientation). Immutable once built.
class MetricGraph {
 public:
  MetricGraph(std::vector<int> vertex_ids, std::vector<Edge> edges);

  const std::vector<int>& vertex_ids() const { return vertex_ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_vertices() const { return vertex_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_external() const;
  std::size_t num_internal() const { return num_edges() - num_external(); }

  /// Dense index of a vertex id; throws GraphError if unknown.
  std::size_t vertex_index(int id) const;

  /// Edge ends meeting at a vertex, in edge-list order with the start end of
  /// an edge listed before its terminal end. Coupling matrices index their
  /// rows and columns in this order.
  const std::vector<EdgeEnd>& incident(std::size_t vertex) const { return incident_[vertex]; }
  std::size_t degree(std::size_t vertex) const { return incident_[vertex].size(); }

  double shortest_internal_length() const;

  /// True when the graph is one vertex with only external edges attached.
  bool is_star() const;

 private:
  std::vector<int> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> incident_;
};

/// n half-lines joined at vertex 0.
MetricGraph make_star(int n);

/// Real line with point defects at the given (sorted, distinct) positions:
/// one vertex per defect, internal edges between consecutive defects and an
/// external edge on each side. Edge 0 is the left half-line (x measured
/// outward from the leftmost defect).
MetricGraph make_line_with_defects(const std::vector<double>& positions);

/// Binary tree of the given depth: root with an external trunk edge, internal
/// edges of `edge_length` between generations, one external edge per leaf.
MetricGraph make_binary_tree(int depth, double edge_length);

/// Builds a graph from a JSON description. Accepted forms:
///   {"factory": "star", "n": 3}
///   {"factory": "line_defects", "points": [-1, 1]}
///   {"factory": "tree", "depth": 2, "edge_length": 1.0}
///   {"vertices": [0, 1], "edges": [{"from": 0, "to": 1, "length": 2.0},
///                                  {"from": 0, "length": "external"}]}
MetricGraph build_graph(const nlohmann::json& node);

}  // namespace qgwnd
