#pragma once

#include <memory>

#include "qgwnd/discrete_operator.hpp"
#include "qgwnd/free_line.hpp"
#include "qgwnd/spectral.hpp"

namespace qgwnd {

class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operator plus its full eigendecomposition. Immutable and safe to share
/// between threads.
///
/// Sign convention: the group is generated by i Laplacian, so with lambda_k
/// the eigenvalues of H = -Laplacian,
///   U(t) f = e^{it Laplacian} f = e^{-itH} f = sum_k e^{-it lambda_k} <f, phi_k> phi_k.
/// The stochastic propagator over a driver increment db is U(db).
class PropagatorContext {
 public:
  PropagatorContext(std::shared_ptr<const DiscreteOperator> op, std::shared_ptr<const SpectralDecomposition> sd);

  const DiscreteOperator& op() const { return *op_; }
  const SpectralDecomposition& spectral() const { return *sd_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return op_->mesh_ptr(); }
  const Eigen::VectorXd& eigenvalues() const { return sd_->eigenvalues; }

  Eigen::VectorXcd coefficients(const GridFunction& f) const { return sd_->coefficients(f); }
  GridFunction synthesize(const Eigen::VectorXcd& a) const { return sd_->synthesize(a); }
  /// a_k e^{-it lambda_k}.
  Eigen::VectorXcd evolve_coefficients(double t, const Eigen::VectorXcd& a) const;

 private:
  std::shared_ptr<const DiscreteOperator> op_;
  std::shared_ptr<const SpectralDecomposition> sd_;
};

/// Assembles, decomposes and wraps in one call.
std::shared_ptr<const PropagatorContext> make_context(std::shared_ptr<const Mesh> mesh,
                                                      std::vector<VertexCoupling> couplings,
                                                      const EigenOptions& options = {});

/// U(t) f. t = 0 returns f unchanged.
GridFunction schrodinger_group(const PropagatorContext& ctx, double t, const GridFunction& f);

/// U(db) f for a driver increment db = beta(t) - beta(s).
GridFunction stochastic_propagator(const PropagatorContext& ctx, double db, const GridFunction& f);

/// Right-hand side of the derivative-commuting formula on a star graph,
///   d/dx U(t) v = -U(t) P_c v' + 2 e^{it d^2} v~' + sum_l <v, phi_l> e^{-it lambda_l} phi_l' + J,
/// with v~' the zero extension of v' to the line, phi_l the bound states and
/// J the delta correction 2 a c e^{it d^2} psi (a = alpha/n, c = v_1(0)) where
///   psi(y) = e^{a y} on y <= 0 for alpha > 0,
///   psi(y) = -e^{a y} on y >= 0 for alpha < 0.
/// Supported couplings: no Robin part, or delta(alpha). v' is taken from
/// v by finite differences; v should have v_j'(0) = 0 so that v' lies in the
/// form domain.
GridFunction star_derivative_rhs(const PropagatorContext& ctx, double t, const GridFunction& v,
                                 double damping = 1e-4);

/// Smallest k with at most `tail` of the spectral L^2 mass of f above k^2.
double spectral_kmax(const PropagatorContext& ctx, const GridFunction& f, double tail = 1e-4);

struct DecayRatio {
  double ratio = 0.0;
  double sup_norm = 0.0;
  double k_max = 0.0;
  bool in_window = true;  // 4 t k_max < L_trunc
};

/// |U(t) P_c f|_inf sqrt(t) / |f|_1. With `continuous_only` false the
/// projection is skipped.
DecayRatio decay_ratio(const PropagatorContext& ctx, const GridFunction& f, double t, bool continuous_only = true,
                       double tail = 1e-4);

}  // namespace qgwnd
