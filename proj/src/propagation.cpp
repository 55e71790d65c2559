#include "qgwnd/propagation.hpp"

#include <cmath>
#include <limits>

namespace qgwnd {

PropagatorContext::PropagatorContext(std::shared_ptr<const DiscreteOperator> op,
                                     std::shared_ptr<const SpectralDecomposition> sd)
    : op_(std::move(op)), sd_(std::move(sd)) {
  if (!sd_->has_vectors()) throw PropagationError("propagator needs eigenvectors");
}

Eigen::VectorXcd PropagatorContext::evolve_coefficients(double t, const Eigen::VectorXcd& a) const {
  Eigen::VectorXcd out(a.size());
  const Eigen::VectorXd& lambda = sd_->eigenvalues;
  for (Eigen::Index k = 0; k < a.size(); ++k) out(k) = a(k) * std::polar(1.0, -t * lambda(k));
  return out;
}

std::shared_ptr<const PropagatorContext> make_context(std::shared_ptr<const Mesh> mesh,
                                                      std::vector<VertexCoupling> couplings,
                                                      const EigenOptions& options) {
  auto op = assemble(std::move(mesh), std::move(couplings));
  EigenOptions opts = options;
  opts.vectors = true;
  auto sd = std::make_shared<const SpectralDecomposition>(eigendecompose(*op, opts));
  return std::make_shared<const PropagatorContext>(op, sd);
}

GridFunction schrodinger_group(const PropagatorContext& ctx, double t, const GridFunction& f) {
  if (t == 0.0) return f;
  return ctx.synthesize(ctx.evolve_coefficients(t, ctx.coefficients(f)));
}

GridFunction stochastic_propagator(const PropagatorContext& ctx, double db, const GridFunction& f) {
  return schrodinger_group(ctx, db, f);
}

GridFunction star_derivative_rhs(const PropagatorContext& ctx, double t, const GridFunction& v, double damping) {
  const Mesh& mesh = ctx.op().mesh();
  if (!mesh.graph().is_star()) throw PropagationError("derivative formula is implemented for star graphs only");
  const VertexCoupling& coupling = ctx.op().couplings().at(0);
  const auto alpha = coupling.delta_strength();
  if (coupling.has_robin_part() && !alpha)
    throw PropagationError("derivative formula needs a coupling without Robin part or a delta coupling");
  const SpectralDecomposition& sd = ctx.spectral();
  const auto n = static_cast<double>(coupling.degree());

  const GridFunction vp = edge_derivative(v);
  GridFunction rhs = -1.0 * schrodinger_group(ctx, t, project_continuous(sd, vp));

  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const EdgeGrid& g = mesh.edge(e);
    const LineFunction line{0.0, g.h, vp.on_edge(e)};
    rhs.on_edge(e) += 2.0 * free_line_propagator(t, line, damping).values;
  }

  if (!sd.point.empty()) {
    const Eigen::VectorXcd wv = mesh.weights().cast<cd>().cwiseProduct(v.values);
    for (const auto l : sd.point) {
      const GridFunction phi = sd.mode(l);
      const cd amp = phi.values.dot(wv) * std::polar(1.0, -t * sd.eigenvalues(l));
      rhs.values += amp * edge_derivative(phi).values;
    }
  }

  if (alpha && *alpha != 0.0) {
    const double a = *alpha / n;
    const cd c = v.values(static_cast<Eigen::Index>(mesh.end_index({0, true})));
    for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
      const EdgeGrid& g = mesh.edge(e);
      if (t == 0.0) {
        // One-sided limit on x > 0: the alpha > 0 profile vanishes there.
        if (a < 0.0)
          for (std::size_t i = 0; i < g.nodes; ++i)
            rhs.values(static_cast<Eigen::Index>(g.offset + i)) -= 2.0 * a * c * std::exp(a * g.x(i));
        continue;
      }
      // Profile support long enough for e^{-|a| y} to fall below 1e-16.
      const double reach = std::max(g.length, 37.0 / std::abs(a));
      const auto m = static_cast<Eigen::Index>(std::ceil(reach / g.h)) + 1;
      LineFunction psi{a > 0.0 ? -static_cast<double>(m - 1) * g.h : 0.0, g.h, Eigen::VectorXcd(m)};
      for (Eigen::Index j = 0; j < m; ++j) psi.values(j) = std::exp(a * psi.x(j));
      const double sign = a > 0.0 ? 1.0 : -1.0;
      const LineGrid out{0.0, g.h, static_cast<Eigen::Index>(g.nodes)};
      rhs.on_edge(e) += (2.0 * a * sign) * c * free_line_propagator(t, psi, out, damping).values;
    }
  }
  return rhs;
}

double spectral_kmax(const PropagatorContext& ctx, const GridFunction& f, double tail) {
  const Eigen::VectorXcd a = ctx.coefficients(f);
  const Eigen::VectorXd& lambda = ctx.eigenvalues();
  const double total = a.squaredNorm();
  if (total == 0.0) return 0.0;
  double above = 0.0;
  for (Eigen::Index k = a.size() - 1; k >= 0; --k) {
    above += std::norm(a(k));
    if (above > tail * total) return std::sqrt(std::max(0.0, lambda(k)));
  }
  return 0.0;
}

DecayRatio decay_ratio(const PropagatorContext& ctx, const GridFunction& f, double t, bool continuous_only, double tail) {
  if (!(t > 0.0)) throw PropagationError("decay ratio needs t > 0");
  const double l1 = lp_norm(f, 1.0);
  if (l1 == 0.0) throw PropagationError("decay ratio of the zero function");
  const GridFunction g = continuous_only ? project_continuous(ctx.spectral(), f) : f;
  DecayRatio r;
  r.sup_norm = lp_norm(schrodinger_group(ctx, t, g), std::numeric_limits<double>::infinity());
  r.ratio = r.sup_norm * std::sqrt(t) / l1;
  r.k_max = spectral_kmax(ctx, g, tail);
  r.in_window = ctx.op().mesh().graph().num_external() == 0 || 4.0 * t * r.k_max < ctx.op().mesh().L_trunc();
  return r;
}

}  // namespace qgwnd
