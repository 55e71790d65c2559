#include "qgwnd/discrete_operator.hpp"

#include <cmath>

namespace qgwnd {

namespace {

using Triplet = Eigen::Triplet<cd>;

/// Orthonormal basis of range(I - P_D), real when the projector is.
CMatrix free_vertex_basis(const ProjectorDecomposition& proj, bool real) {
  const auto n = proj.P_D.rows();
  const CMatrix complement = CMatrix::Identity(n, n) - proj.P_D;
  std::vector<Eigen::Index> keep;
  CMatrix vectors;
  Eigen::VectorXd values;
  if (real) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(complement.real());
    vectors = eig.eigenvectors().cast<cd>();
    values = eig.eigenvalues();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(complement);
    vectors = eig.eigenvectors();
    values = eig.eigenvalues();
  }
  for (Eigen::Index j = 0; j < n; ++j)
    if (values(j) > 0.5) keep.push_back(j);
  CMatrix basis(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = vectors.col(keep[c]);
  return basis;
}

CMatrix inverse_sqrt_hermitian(const CMatrix& m, bool real) {
  if (real) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.real());
    if (eig.eigenvalues().minCoeff() <= 0.0) throw AssemblyError("mass block is not positive definite");
    return (eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
            eig.eigenvectors().transpose())
        .cast<cd>();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(m);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw AssemblyError("mass block is not positive definite");
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().adjoint();
}

Eigen::VectorXcd slot_values(const Mesh& mesh, const GridFunction& f, std::size_t v) {
  const auto slots = mesh.vertex_slots(v);
  Eigen::VectorXcd F(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t j = 0; j < slots.size(); ++j) F(static_cast<Eigen::Index>(j)) = f.values(static_cast<Eigen::Index>(slots[j]));
  return F;
}

}  // namespace

DiscreteOperator::DiscreteOperator(std::shared_ptr<const Mesh> mesh, std::vector<VertexCoupling> couplings)
    : mesh_(std::move(mesh)), couplings_(std::move(couplings)) {
  const MetricGraph& g = mesh_->graph();
  if (couplings_.size() != g.num_vertices())
    throw AssemblyError("expected one coupling per vertex (" + std::to_string(g.num_vertices()) + "), got " +
                        std::to_string(couplings_.size()));
  for (std::size_t v = 0; v < couplings_.size(); ++v) {
    if (static_cast<std::size_t>(couplings_[v].degree()) != g.degree(v))
      throw AssemblyError("coupling at vertex " + std::to_string(g.vertex_ids()[v]) + " has size " +
                          std::to_string(couplings_[v].degree()) + " but the vertex has degree " +
                          std::to_string(g.degree(v)));
    real_ = real_ && couplings_[v].is_real();
  }

  const auto N = raw_size();
  std::vector<Triplet> q, robin, s;
  Eigen::Index dof = 0;

  // Interior nodes and free far ends.
  std::vector<Eigen::Index> diag_dofs;
  std::vector<double> diag_weights;
  const Eigen::VectorXd& w = mesh_->weights();
  for (const EdgeGrid& e : mesh_->edges()) {
    std::size_t last = e.nodes - 1;
    if (e.external && mesh_->far_end() == FarEnd::neumann) last = e.nodes;
    for (std::size_t i = 1; i < last; ++i) {
      const auto raw = static_cast<Eigen::Index>(e.offset + i);
      q.emplace_back(raw, dof, 1.0);
      s.emplace_back(dof, dof, 1.0 / std::sqrt(w(raw)));
      ++dof;
    }
  }

  // Vertex blocks.
  for (std::size_t v = 0; v < couplings_.size(); ++v) {
    const auto& proj = couplings_[v].projectors();
    const bool real = couplings_[v].is_real();
    const CMatrix Qv = free_vertex_basis(proj, real);
    const auto slots = mesh_->vertex_slots(v);
    const Eigen::Index r = Qv.cols();
    if (r == 0) continue;
    Eigen::VectorXd ws(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const auto raw = static_cast<Eigen::Index>(slots[j]);
      ws(static_cast<Eigen::Index>(j)) = w(raw);
      for (Eigen::Index c = 0; c < r; ++c)
        if (Qv(static_cast<Eigen::Index>(j), c) != cd(0.0)) q.emplace_back(raw, dof + c, Qv(static_cast<Eigen::Index>(j), c));
    }
    const CMatrix Mv = Qv.adjoint() * ws.asDiagonal() * Qv;
    const CMatrix Sv = inverse_sqrt_hermitian(Mv, real);
    const CMatrix Rv = Qv.adjoint() * proj.Lambda * Qv;
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = 0; b < r; ++b) {
        s.emplace_back(dof + a, dof + b, Sv(a, b));
        if (Rv(a, b) != cd(0.0)) robin.emplace_back(dof + a, dof + b, Rv(a, b));
      }
    }
    dof += r;
  }
  if (dof == 0) throw AssemblyError("constrained space is empty");

  Q_.resize(N, dof);
  Q_.setFromTriplets(q.begin(), q.end());
  S_.resize(dof, dof);
  S_.setFromTriplets(s.begin(), s.end());

  std::vector<Triplet> k;
  for (const EdgeGrid& e : mesh_->edges()) {
    const double inv = 1.0 / e.h;
    for (std::size_t i = 0; i + 1 < e.nodes; ++i) {
      const auto a = static_cast<Eigen::Index>(e.offset + i);
      k.emplace_back(a, a, inv);
      k.emplace_back(a + 1, a + 1, inv);
      k.emplace_back(a, a + 1, -inv);
      k.emplace_back(a + 1, a, -inv);
    }
  }
  SparseC Kraw(N, N);
  Kraw.setFromTriplets(k.begin(), k.end());
  SparseC Wd(N, N);
  Wd.reserve(Eigen::VectorXi::Constant(N, 1));
  for (Eigen::Index i = 0; i < N; ++i) Wd.insert(i, i) = w(i);

  SparseC R(dof, dof);
  R.setFromTriplets(robin.begin(), robin.end());
  const SparseC Qh = Q_.adjoint();
  K_ = SparseC(Qh * Kraw * Q_) + R;
  K_.prune(cd(0.0), 0.0);
  M_ = SparseC(Qh * Wd * Q_);
  M_.prune(cd(0.0), 0.0);
  A_ = SparseC(S_ * K_ * S_);
  A_ = 0.5 * (A_ + SparseC(A_.adjoint()));
  A_.prune(cd(0.0), 0.0);
}

Eigen::VectorXcd DiscreteOperator::restrict(const GridFunction& f) const {
  const Eigen::VectorXcd weighted = mesh_->weights().cast<cd>().cwiseProduct(f.values);
  return S_ * (S_ * (Q_.adjoint() * weighted));
}

GridFunction DiscreteOperator::extend(const Eigen::VectorXcd& c) const { return {mesh_, Q_ * c}; }

GridFunction DiscreteOperator::project_domain(const GridFunction& f) const { return extend(restrict(f)); }

double DiscreteOperator::energy(const GridFunction& f) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh_->edges().size(); ++e) {
    const EdgeGrid& g = mesh_->edge(e);
    const auto u = f.on_edge(e);
    for (Eigen::Index i = 0; i + 1 < u.size(); ++i) sum += std::norm(u[i + 1] - u[i]) / g.h;
  }
  for (std::size_t v = 0; v < couplings_.size(); ++v) {
    const auto& Lambda = couplings_[v].projectors().Lambda;
    if (Lambda.norm() == 0.0) continue;
    const Eigen::VectorXcd F = slot_values(*mesh_, f, v);
    sum += F.dot(Lambda * F).real();
  }
  return sum;
}

double DiscreteOperator::constraint_residual(const GridFunction& f) const {
  double res = 0.0;
  for (std::size_t v = 0; v < couplings_.size(); ++v)
    res += (couplings_[v].projectors().P_D * slot_values(*mesh_, f, v)).norm();
  if (mesh_->far_end() == FarEnd::dirichlet) {
    for (const EdgeGrid& e : mesh_->edges())
      if (e.external) res += std::abs(f.values(static_cast<Eigen::Index>(e.offset + e.nodes - 1)));
  }
  return res;
}

std::shared_ptr<const DiscreteOperator> assemble(std::shared_ptr<const Mesh> mesh, std::vector<VertexCoupling> couplings) {
  return std::make_shared<const DiscreteOperator>(std::move(mesh), std::move(couplings));
}

}  // namespace qgwnd
