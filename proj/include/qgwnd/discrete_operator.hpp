#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qgwnd/coupling.hpp"
#include "qgwnd/mesh.hpp"

namespace qgwnd {

using SparseC = Eigen::SparseMatrix<cd>;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P1 finite-element representation of -Laplacian with vertex couplings.
///
/// Raw degrees of freedom are the mesh nodes (vertex values duplicated per
/// incident edge end). The constrained space is the range of Q, where
///   interior nodes map to themselves,
///   the slots of vertex v map through an orthonormal basis of range(I - P_D),
///   Dirichlet far ends are dropped and Neumann far ends kept.
/// K = Q^H K_raw Q + sum_v Q_v^H Lambda_v Q_v and M = Q^H W Q with W the
/// trapezoid (lumped) mass. M is block diagonal, so S = M^{-1/2} is formed
/// blockwise and the spectral problem is solved as A = S K S.
class DiscreteOperator {
 public:
  DiscreteOperator(std::shared_ptr<const Mesh> mesh, std::vector<VertexCoupling> couplings);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const std::vector<VertexCoupling>& couplings() const { return couplings_; }

  Eigen::Index raw_size() const { return static_cast<Eigen::Index>(mesh_->size()); }
  Eigen::Index size() const { return Q_.cols(); }

  const SparseC& Q() const { return Q_; }
  const SparseC& K() const { return K_; }
  const SparseC& M() const { return M_; }
  const SparseC& S() const { return S_; }
  /// S K S, the hermitian matrix whose eigenpairs give the spectrum.
  const SparseC& A() const { return A_; }

  /// True when every coupling, and hence every matrix above, is real.
  bool is_real() const { return real_; }

  /// Constrained coordinates of the W-orthogonal projection of f onto range(Q).
  Eigen::VectorXcd restrict(const GridFunction& f) const;
  GridFunction extend(const Eigen::VectorXcd& c) const;
  /// Q restrict(f): nearest function (in L^2) satisfying the Dirichlet parts.
  GridFunction project_domain(const GridFunction& f) const;

  /// E(f, f) = sum_e int |f_e'|^2 + sum_v <Lambda_v P_R f(v), P_R f(v)> on the
  /// raw nodes. Equals c^H K c for f = Q c.
  double energy(const GridFunction& f) const;

  /// Size of the Dirichlet defect: sum over vertices of |P_D f(v)| plus the
  /// moduli at Dirichlet far ends.
  double constraint_residual(const GridFunction& f) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<VertexCoupling> couplings_;
  bool real_ = true;
  SparseC Q_, K_, M_, S_, A_;
};

/// Builds the operator for `mesh` with one coupling per vertex (vertex index
/// order). Throws AssemblyError when a coupling's size differs from the
/// vertex degree.
std::shared_ptr<const DiscreteOperator> assemble(std::shared_ptr<const Mesh> mesh,
                                                 std::vector<VertexCoupling> couplings);

}  // namespace qgwnd
