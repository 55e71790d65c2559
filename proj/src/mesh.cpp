#include "qgwnd/mesh.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qgwnd {

Mesh::Mesh(std::shared_ptr<const MetricGraph> graph, std::vector<EdgeGrid> edges, double L_trunc, FarEnd far_end)
    : graph_(std::move(graph)), edges_(std::move(edges)), L_trunc_(L_trunc), far_end_(far_end) {
  size_ = 0;
  for (auto& e : edges_) {
    e.offset = size_;
    size_ += e.nodes;
  }
  weights_.setZero(static_cast<Eigen::Index>(size_));
  for (const auto& e : edges_) {
    for (std::size_t i = 0; i < e.nodes; ++i) {
      const bool end = (i == 0 || i + 1 == e.nodes);
      weights_[static_cast<Eigen::Index>(e.offset + i)] = end ? 0.5 * e.h : e.h;
    }
  }
}

std::pair<std::size_t, std::size_t> Mesh::locate(std::size_t global) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (global >= edges_[e].offset && global < edges_[e].offset + edges_[e].nodes)
      return {e, global - edges_[e].offset};
  }
  throw std::out_of_range("global DOF index out of range");
}

std::size_t Mesh::end_index(const EdgeEnd& end) const {
  const EdgeGrid& g = edges_[end.edge];
  return end.at_start ? g.offset : g.offset + g.nodes - 1;
}

std::vector<std::size_t> Mesh::vertex_slots(std::size_t vertex) const {
  std::vector<std::size_t> slots;
  for (const EdgeEnd& end : graph_->incident(vertex)) slots.push_back(end_index(end));
  return slots;
}

double Mesh::min_h() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) h = std::min(h, e.h);
  return h;
}

std::shared_ptr<const Mesh> discretize(std::shared_ptr<const MetricGraph> graph, const MeshOptions& options) {
  if (!(options.h > 0.0)) throw MeshError("mesh spacing h must be positive");
  if (graph->num_external() > 0 && !(options.L_trunc >= 10.0 * options.h))
    throw MeshError("L_trunc must be at least 10 h");
  std::vector<EdgeGrid> grids;
  for (std::size_t e = 0; e < graph->num_edges(); ++e) {
    const Edge& edge = graph->edges()[e];
    const auto override_it = options.edge_h.find(e);
    const double h = override_it != options.edge_h.end() ? override_it->second : options.h;
    if (!(h > 0.0)) throw MeshError("edge spacing must be positive");
    EdgeGrid g;
    g.external = edge.external();
    g.length = g.external ? options.L_trunc : edge.length;
    if (!g.external && h > g.length / 3.0)
      throw MeshError("h larger than a third of internal edge " + std::to_string(e));
    const auto cells = static_cast<std::size_t>(std::llround(g.length / h));
    if (cells < 2) throw MeshError("edge " + std::to_string(e) + " has fewer than 3 nodes");
    g.nodes = cells + 1;
    g.h = g.length / static_cast<double>(cells);
    grids.push_back(g);
  }
  return std::make_shared<const Mesh>(std::move(graph), std::move(grids), options.L_trunc, options.far_end);
}

GridFunction::GridFunction(std::shared_ptr<const Mesh> m)
    : mesh(std::move(m)), values(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh->size()))) {}

GridFunction::GridFunction(std::shared_ptr<const Mesh> m, Eigen::VectorXcd v) : mesh(std::move(m)), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != mesh->size())
    throw std::invalid_argument("grid function length does not match mesh");
}

GridFunction GridFunction::sample(std::shared_ptr<const Mesh> m, const std::function<cd(std::size_t, double)>& fn) {
  GridFunction f(m);
  for (std::size_t e = 0; e < m->edges().size(); ++e) {
    const EdgeGrid& g = m->edge(e);
    for (std::size_t i = 0; i < g.nodes; ++i) f.values[static_cast<Eigen::Index>(g.offset + i)] = fn(e, g.x(i));
  }
  return f;
}

Eigen::VectorBlock<Eigen::VectorXcd> GridFunction::on_edge(std::size_t e) {
  const EdgeGrid& g = mesh->edge(e);
  return values.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.nodes));
}

Eigen::VectorBlock<const Eigen::VectorXcd> GridFunction::on_edge(std::size_t e) const {
  const EdgeGrid& g = mesh->edge(e);
  return values.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.nodes));
}

bool GridFunction::finite() const { return values.allFinite(); }

GridFunction operator+(const GridFunction& a, const GridFunction& b) { return {a.mesh, a.values + b.values}; }
GridFunction operator-(const GridFunction& a, const GridFunction& b) { return {a.mesh, a.values - b.values}; }
GridFunction operator*(cd scale, const GridFunction& a) { return {a.mesh, scale * a.values}; }

double lp_norm(const GridFunction& f, double p) {
  if (std::isinf(p)) return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  const Eigen::VectorXd& w = f.mesh->weights();
  double sum = 0.0;
  if (p == 2.0) {
    sum = (w.array() * f.values.cwiseAbs2().array()).sum();
    return std::sqrt(sum);
  }
  for (Eigen::Index i = 0; i < f.values.size(); ++i) sum += w[i] * std::pow(std::abs(f.values[i]), p);
  return std::pow(sum, 1.0 / p);
}

GridFunction edge_derivative(const GridFunction& f) {
  GridFunction d(f.mesh);
  for (std::size_t e = 0; e < f.mesh->edges().size(); ++e) {
    const EdgeGrid& g = f.mesh->edge(e);
    const auto u = f.on_edge(e);
    auto du = d.on_edge(e);
    const auto n = static_cast<Eigen::Index>(g.nodes);
    const double inv = 1.0 / g.h;
    for (Eigen::Index i = 1; i + 1 < n; ++i) du[i] = 0.5 * inv * (u[i + 1] - u[i - 1]);
    du[0] = 0.5 * inv * (-3.0 * u[0] + 4.0 * u[1] - u[2]);
    du[n - 1] = 0.5 * inv * (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]);
  }
  return d;
}

double sobolev_norm(const GridFunction& f) {
  double sum = lp_norm(f, 2.0);
  sum *= sum;
  for (std::size_t e = 0; e < f.mesh->edges().size(); ++e) {
    const EdgeGrid& g = f.mesh->edge(e);
    const auto u = f.on_edge(e);
    for (Eigen::Index i = 0; i + 1 < u.size(); ++i) sum += std::norm(u[i + 1] - u[i]) / g.h;
  }
  return std::sqrt(sum);
}

}  // namespace qgwnd
