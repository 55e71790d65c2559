#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qgwnd/discrete_operator.hpp"

namespace qgwnd {

class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenOptions {
  bool vectors = true;
  /// Eigenvalues strictly below this are the point spectrum.
  double point_threshold = -1e-8;
  /// Values-only solves switch to a banded solver after bandwidth-reducing
  /// reordering when the bandwidth is at most this fraction of the size.
  double banded_fraction = 0.05;
};

/// Eigenpairs of K phi = lambda M phi, eigenvectors stored on the raw nodes
/// (phi = Q S psi), orthonormal in the trapezoid inner product.
class SpectralDecomposition {
 public:
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd basis_re;      // raw nodes x modes; empty without vectors
  Eigen::MatrixXd basis_im;      // empty when the operator is real
  std::vector<Eigen::Index> point;  // indices with lambda < point_threshold
  double point_threshold = -1e-8;
  double M_shift = 1.0;
  /// The negative-spectrum split is exact only on star graphs.
  bool split_exact = false;

  bool has_vectors() const { return basis_re.size() > 0; }
  bool is_real() const { return basis_im.size() == 0; }
  Eigen::Index modes() const { return eigenvalues.size(); }

  /// a_k = <f, phi_k>_W.
  Eigen::VectorXcd coefficients(const GridFunction& f) const;
  /// Columnwise coefficients of several raw-node vectors.
  Eigen::MatrixXcd coefficients(const Eigen::MatrixXcd& values) const;
  GridFunction synthesize(const Eigen::VectorXcd& a) const;
  Eigen::MatrixXcd synthesize(const Eigen::MatrixXcd& a) const;
  GridFunction mode(Eigen::Index k) const;
};

SpectralDecomposition eigendecompose(const DiscreteOperator& op, const EigenOptions& options = {});

/// f - sum_{k in point} <f, phi_k> phi_k.
GridFunction project_continuous(const SpectralDecomposition& sd, const GridFunction& f);

/// sqrt(M_shift |f|^2 + E(f, f)) for f in the constrained space.
double form_norm(const SpectralDecomposition& sd, const DiscreteOperator& op, const GridFunction& f);

/// E(f, f) / |f|^2.
double rayleigh_quotient(const DiscreteOperator& op, const GridFunction& f);

/// CSV with columns index,lambda,is_point.
void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& sd);
/// Long-format eigenvector dump: mode,edge,node,x,re,im.
void write_eigenvectors_csv(std::ostream& out, const SpectralDecomposition& sd);

}  // namespace qgwnd
