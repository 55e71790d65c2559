#include "qgwnd/picard.hpp"

#include <algorithm>
#include <cmath>

namespace qgwnd {

namespace {

// Nonlinearity applied columnwise to physical states; th(j) is the
// norm-truncation factor of column j.
Eigen::MatrixXcd apply_nonlinearity(const Eigen::MatrixXcd& U, const Eigen::VectorXd& th, const SolverConfig& cfg) {
  Eigen::MatrixXcd F(U.rows(), U.cols());
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const double scale = cfg.nonlinearity * th(j);
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const cd u = U(i, j);
      const double rho = std::norm(u);
      double g = rho == 0.0 ? 0.0 : scale * std::pow(rho, cfg.sigma);
      if (cfg.truncation.kind == TruncationKind::pointwise && g != 0.0) g *= theta(rho / cfg.truncation.R);
      F(i, j) = g * u;
    }
  }
  return F;
}

double column_lp(const Eigen::VectorXd& w, const Eigen::MatrixXcd& U, Eigen::Index j, double p) {
  if (std::isinf(p)) return U.col(j).cwiseAbs().maxCoeff();
  if (p == 2.0) return std::sqrt((w.array() * U.col(j).cwiseAbs2().array()).sum());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) sum += w(i) * std::pow(std::abs(U(i, j)), p);
  return std::pow(sum, 1.0 / p);
}

}  // namespace

PicardResult picard_solve(const PropagatorContext& ctx, const GridFunction& X0, const Eigen::VectorXd& driver,
                          const SolverConfig& cfg, const PicardOptions& options) {
  validate(cfg);
  const std::size_t n = step_count(cfg.T, cfg.dt);
  if (static_cast<std::size_t>(driver.size()) < n + 1)
    throw SolverError("driver has " + std::to_string(driver.size()) + " samples, needs " + std::to_string(n + 1));
  const double dt = cfg.T / static_cast<double>(n);
  const Eigen::VectorXd& lambda = ctx.eigenvalues();
  const Eigen::VectorXd& w = ctx.mesh_ptr()->weights();
  const SpectralDecomposition& sd = ctx.spectral();
  const bool norm_trunc = cfg.truncation.kind == TruncationKind::norm;

  PicardResult result;
  Trajectory& traj = result.trajectory;
  TrajectoryRecorder rec(ctx, cfg, traj);
  rec.record(0.0, 0, X0, true);
  const double scale = std::max(1.0, traj.l2.front());

  Eigen::VectorXcd a_start = ctx.coefficients(X0);
  GridFunction u_start = X0;
  std::size_t start = 0;
  std::size_t window = options.window_steps == 0 ? n : std::min(options.window_steps, n);

  while (start < n) {
    const std::size_t end = std::min(start + window, n);
    const auto m = static_cast<Eigen::Index>(end - start);
    const double beta0 = driver(static_cast<Eigen::Index>(start));

    // Phases e^{-i (beta_j - beta_start) lambda} per column.
    Eigen::MatrixXcd phase(lambda.size(), m + 1);
    for (Eigen::Index j = 0; j <= m; ++j) {
      const double db = driver(static_cast<Eigen::Index>(start) + j) - beta0;
      for (Eigen::Index k = 0; k < lambda.size(); ++k) phase(k, j) = std::polar(1.0, -db * lambda(k));
    }

    Eigen::MatrixXcd A = phase.array().colwise() * a_start.array();
    Eigen::MatrixXcd U = sd.synthesize(A);
    U.col(0) = u_start.values;

    bool converged = false;
    int it = 0;
    int rises = 0;
    double prev = std::numeric_limits<double>::infinity();
    while (it < options.max_iter) {
      Eigen::VectorXd th = Eigen::VectorXd::Ones(m + 1);
      if (norm_trunc) {
        double acc = std::pow(traj.running_rp.back(), cfg.r);
        double last = traj.lp.back();
        th(0) = theta(traj.running_rp.back() / cfg.truncation.R);
        for (Eigen::Index j = 1; j <= m; ++j) {
          const double lp = column_lp(w, U, j, cfg.p);
          acc += 0.5 * dt * (std::pow(last, cfg.r) + std::pow(lp, cfg.r));
          last = lp;
          th(j) = theta(std::pow(acc, 1.0 / cfg.r) / cfg.truncation.R);
        }
      }
      const Eigen::MatrixXcd Fhat = sd.coefficients(apply_nonlinearity(U, th, cfg));
      // b_j = e^{+i (beta_j - beta_start) lambda} F^_j, integrated by the trapezoid rule.
      const Eigen::MatrixXcd b = phase.conjugate().cwiseProduct(Fhat);
      Eigen::MatrixXcd Anew(lambda.size(), m + 1);
      Eigen::VectorXcd I = Eigen::VectorXcd::Zero(lambda.size());
      Anew.col(0) = a_start;
      for (Eigen::Index j = 1; j <= m; ++j) {
        I += 0.5 * dt * (b.col(j - 1) + b.col(j));
        Anew.col(j) = phase.col(j).cwiseProduct(a_start + cd(0.0, 1.0) * I);
      }
      Eigen::MatrixXcd Unew = sd.synthesize(Anew);
      Unew.col(0) = u_start.values;
      double diff = 0.0;
      for (Eigen::Index j = 1; j <= m; ++j) {
        const double d = std::sqrt((w.array() * (Unew.col(j) - U.col(j)).cwiseAbs2().array()).sum());
        diff = std::max(diff, d);
      }
      A = std::move(Anew);
      U = std::move(Unew);
      ++it;
      if (!std::isfinite(diff)) break;
      if (diff <= options.tol * scale) {
        converged = true;
        break;
      }
      if (diff >= prev && ++rises >= 3) break;
      prev = diff;
    }

    if (!converged) {
      if (m == 1 || result.halvings >= options.max_halvings)
        throw SolverError("Picard iteration failed to contract on [" + std::to_string(start * dt) + ", " +
                          std::to_string(end * dt) + "] after " + std::to_string(result.halvings) + " halvings");
      window = std::max<std::size_t>(1, static_cast<std::size_t>(m) / 2);
      ++result.halvings;
      continue;
    }

    result.iterations.push_back(it);
    for (Eigen::Index j = 1; j <= m; ++j) {
      const std::size_t step = start + static_cast<std::size_t>(j);
      GridFunction u(ctx.mesh_ptr(), U.col(j));
      if (!u.finite()) throw SolverError("non-finite Picard iterate at step " + std::to_string(step));
      rec.record(static_cast<double>(step) * dt, step, u, step == n);
      if (j == m) u_start = std::move(u);
    }
    a_start = A.col(m);
    start = end;
  }
  return result;
}

}  // namespace qgwnd
