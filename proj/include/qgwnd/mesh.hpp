#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qgwnd/graph.hpp"

namespace qgwnd {

using cd = std::complex<double>;

/// Condition imposed at the far end of a truncated external edge.
enum class FarEnd { dirichlet, neumann };

struct MeshOptions {
  double h = 0.1;
  double L_trunc = 20.0;
  FarEnd far_end = FarEnd::dirichlet;
  std::map<std::size_t, double> edge_h;  // per-edge spacing overrides
};

/// Uniform grid on one edge. Node 0 sits at x = 0 (the `from` vertex).
struct EdgeGrid {
  std::size_t offset = 0;  // global index of node 0
  std::size_t nodes = 0;
  double h = 0.0;
  double length = 0.0;  // l_e, or L_trunc for external edges
  bool external = false;

  double x(std::size_t node) const { return static_cast<double>(node) * h; }
};

/// Per-edge uniform discretization. Every (edge, node) pair owns one global
/// degree of freedom; vertex values are kept as separate boundary slots, one
/// per incident edge end, and are tied together later by the coupling.
class Mesh {
 public:
  Mesh(std::shared_ptr<const MetricGraph> graph, std::vector<EdgeGrid> edges, double L_trunc, FarEnd far_end);

  const MetricGraph& graph() const { return *graph_; }
  std::shared_ptr<const MetricGraph> graph_ptr() const { return graph_; }
  const std::vector<EdgeGrid>& edges() const { return edges_; }
  const EdgeGrid& edge(std::size_t e) const { return edges_[e]; }
  std::size_t size() const { return size_; }
  double L_trunc() const { return L_trunc_; }
  FarEnd far_end() const { return far_end_; }

  std::size_t index(std::size_t edge, std::size_t node) const { return edges_[edge].offset + node; }
  std::pair<std::size_t, std::size_t> locate(std::size_t global) const;
  std::size_t end_index(const EdgeEnd& end) const;

  /// Global indices of the boundary slots at a vertex, in incident order.
  std::vector<std::size_t> vertex_slots(std::size_t vertex) const;

  /// Trapezoidal quadrature weights per global DOF.
  const Eigen::VectorXd& weights() const { return weights_; }

  double min_h() const;

 private:
  std::shared_ptr<const MetricGraph> graph_;
  std::vector<EdgeGrid> edges_;
  std::size_t size_ = 0;
  double L_trunc_ = 0.0;
  FarEnd far_end_ = FarEnd::dirichlet;
  Eigen::VectorXd weights_;
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform per-edge grids; external edges truncated to [0, L_trunc].
/// Internal edges get round(l/h) cells so that the grid ends exactly at l.
std::shared_ptr<const Mesh> discretize(std::shared_ptr<const MetricGraph> graph, const MeshOptions& options);

/// Complex samples on every global DOF of a mesh.
struct GridFunction {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXcd values;

  GridFunction() = default;
  explicit GridFunction(std::shared_ptr<const Mesh> m);
  GridFunction(std::shared_ptr<const Mesh> m, Eigen::VectorXcd v);

  /// Samples fn(edge, x) at every node.
  static GridFunction sample(std::shared_ptr<const Mesh> m, const std::function<cd(std::size_t, double)>& fn);

  Eigen::VectorBlock<Eigen::VectorXcd> on_edge(std::size_t e);
  Eigen::VectorBlock<const Eigen::VectorXcd> on_edge(std::size_t e) const;

  bool finite() const;
};

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(cd scale, const GridFunction& a);

/// (sum_e int |f_e|^p)^(1/p) by the trapezoidal rule; p = inf gives the max
/// modulus over nodes.
double lp_norm(const GridFunction& f, double p);

/// Second-order finite-difference derivative along each edge (central inside,
/// one-sided three-point at both ends). Vertex slots keep their per-edge value.
GridFunction edge_derivative(const GridFunction& f);

/// Discrete W^{1,2} norm: trapezoidal L^2 part plus cellwise |f'|^2.
double sobolev_norm(const GridFunction& f);

}  // namespace qgwnd
