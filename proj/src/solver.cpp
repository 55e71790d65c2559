#include "qgwnd/solver.hpp"

#include <cmath>

namespace qgwnd {

std::string to_string(TruncationKind kind) {
  switch (kind) {
    case TruncationKind::none: return "none";
    case TruncationKind::norm: return "norm";
    case TruncationKind::pointwise: return "pointwise";
  }
  return "none";
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::splitting: return "splitting";
    case Scheme::picard: return "picard";
    case Scheme::ito_euler: return "ito_euler";
  }
  return "splitting";
}

TruncationKind truncation_from_string(const std::string& name) {
  if (name == "none") return TruncationKind::none;
  if (name == "norm") return TruncationKind::norm;
  if (name == "pointwise") return TruncationKind::pointwise;
  throw ConfigError("unknown truncation '" + name + "'");
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "splitting") return Scheme::splitting;
  if (name == "picard") return Scheme::picard;
  if (name == "ito_euler") return Scheme::ito_euler;
  throw ConfigError("unknown scheme '" + name + "'");
}

bool admissible(double r, double p) {
  if (std::isinf(r)) return p == 2.0;
  return r >= 2.0 && p >= 2.0 && std::isfinite(p) && 2.0 / r + 1.0 / p > 0.5;
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("T must be positive");
  if (!(cfg.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (!admissible(cfg.r, cfg.p)) throw ConfigError("(r, p) is not an admissible pair");
  if (!(cfg.blowup_factor > 1.0)) throw ConfigError("blowup_factor must exceed 1");
  switch (cfg.truncation.kind) {
    case TruncationKind::none:
      if (cfg.nonlinearity != 0.0 && !(cfg.sigma < 2.0))
        throw ConfigError("untruncated runs need sigma < 2");
      break;
    case TruncationKind::norm: {
      if (!(cfg.truncation.R > 0.0)) throw ConfigError("truncation radius R must be positive");
      if (!(cfg.sigma >= 0.5)) throw ConfigError("truncated runs need sigma >= 1/2");
      const double p = 2.0 * cfg.sigma + 2.0;
      if (std::abs(cfg.p - p) > 1e-12) throw ConfigError("norm truncation needs p = 2 sigma + 2");
      if (!(cfg.r >= p) || !(cfg.r < 4.0 * (cfg.sigma + 1.0) / cfg.sigma))
        throw ConfigError("norm truncation needs 2 sigma + 2 <= r < 4 (sigma + 1) / sigma");
      break;
    }
    case TruncationKind::pointwise:
      if (!(cfg.truncation.R > 0.0)) throw ConfigError("truncation radius R must be positive");
      if (!(cfg.sigma >= 0.5)) throw ConfigError("truncated runs need sigma >= 1/2");
      break;
  }
}

double theta(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double s = x - 1.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double theta_R(const Trajectory& traj, double r, double p, double R, double t) {
  std::vector<double> times, values;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double ti = traj.times.at(traj.state_steps.at(i));
    if (ti > t + 1e-12) break;
    times.push_back(ti);
    values.push_back(lp_norm(traj.states[i], p));
  }
  if (times.empty()) throw std::invalid_argument("theta_R: no stored state at or before t");
  return theta(time_norm(times, values, r) / R);
}

GridFunction nonlinear_phase_step(const GridFunction& f, double tau, double sigma, const Truncation& trunc, double scale) {
  GridFunction out = f;
  if (tau == 0.0 || scale == 0.0) return out;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    const double rho = std::norm(out.values(i));
    if (rho == 0.0) continue;
    double g = scale * std::pow(rho, sigma);
    if (trunc.kind == TruncationKind::pointwise) g *= theta(rho / trunc.R);
    out.values(i) *= std::polar(1.0, tau * g);
  }
  return out;
}

GridFunction splitting_step(const PropagatorContext& ctx, const GridFunction& f, double db, double dt,
                            const SolverConfig& cfg, double theta_factor) {
  const double scale = cfg.nonlinearity * theta_factor;
  if (cfg.strang) {
    GridFunction u = stochastic_propagator(ctx, 0.5 * db, f);
    u = nonlinear_phase_step(u, dt, cfg.sigma, cfg.truncation, scale);
    return stochastic_propagator(ctx, 0.5 * db, u);
  }
  return nonlinear_phase_step(stochastic_propagator(ctx, db, f), dt, cfg.sigma, cfg.truncation, scale);
}

TrajectoryRecorder::TrajectoryRecorder(const PropagatorContext& ctx, const SolverConfig& cfg, Trajectory& traj)
    : ctx_(ctx), cfg_(cfg), traj_(traj) {
  traj_.r = cfg.r;
  traj_.p = cfg.p;
}

void TrajectoryRecorder::record(double t, std::size_t step, const GridFunction& u, bool force_store) {
  traj_.times.push_back(t);
  traj_.l2.push_back(lp_norm(u, 2.0));
  traj_.form.push_back(form_norm(ctx_.spectral(), ctx_.op(), u));
  traj_.linf.push_back(lp_norm(u, std::numeric_limits<double>::infinity()));
  const double lp = cfg_.p == 2.0 ? traj_.l2.back() : lp_norm(u, cfg_.p);
  traj_.lp.push_back(lp);
  if (std::isinf(cfg_.r)) {
    acc_ = std::max(acc_, lp);
    traj_.running_rp.push_back(acc_);
  } else {
    if (traj_.times.size() > 1) acc_ += 0.5 * (t - last_t_) * (std::pow(last_lp_, cfg_.r) + std::pow(lp, cfg_.r));
    traj_.running_rp.push_back(std::pow(acc_, 1.0 / cfg_.r));
  }
  last_t_ = t;
  last_lp_ = lp;
  const bool periodic = cfg_.save_every > 0 && step % cfg_.save_every == 0;
  if (force_store || periodic) {
    traj_.state_steps.push_back(step);
    traj_.states.push_back(u);
  }
}

void TrajectoryRecorder::store_final(std::size_t step, const GridFunction& u) {
  if (traj_.state_steps.empty() || traj_.state_steps.back() != step) {
    traj_.state_steps.push_back(step);
    traj_.states.push_back(u);
  }
}

Trajectory solve_with_driver(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg,
                             const Eigen::VectorXd& beta) {
  validate(cfg);
  const std::size_t n = step_count(cfg.T, cfg.dt);
  if (static_cast<std::size_t>(beta.size()) < n + 1)
    throw SolverError("driver has " + std::to_string(beta.size()) + " samples, needs " + std::to_string(n + 1));
  const double dt = cfg.T / static_cast<double>(n);
  Trajectory traj;
  TrajectoryRecorder rec(ctx, cfg, traj);
  GridFunction u = X0;
  rec.record(0.0, 0, u, true);
  const double ceiling = cfg.blowup_factor * traj.linf.front();
  for (std::size_t k = 0; k < n; ++k) {
    double th = 1.0;
    if (cfg.truncation.kind == TruncationKind::norm) th = theta(traj.running_rp.back() / cfg.truncation.R);
    const double db = beta(static_cast<Eigen::Index>(k + 1)) - beta(static_cast<Eigen::Index>(k));
    u = splitting_step(ctx, u, db, dt, cfg, th);
    const double t = static_cast<double>(k + 1) * dt;
    if (!u.finite())
      throw SolverError("non-finite solution at step " + std::to_string(k + 1) + " (t = " + std::to_string(t) +
                        "); last L2 norm " + std::to_string(traj.l2.back()));
    rec.record(t, k + 1, u, k + 1 == n);
    if (cfg.truncation.kind == TruncationKind::none && traj.linf.front() > 0.0 && traj.linf.back() > ceiling) {
      traj.stopped = true;
      traj.stop_time = t;
      traj.stop_reason = "local solution: max|u| exceeded " + std::to_string(cfg.blowup_factor) + " x initial max";
      rec.store_final(k + 1, u);
      break;
    }
  }
  return traj;
}

Trajectory solve_wnd(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg) {
  validate(cfg);
  const std::size_t n = step_count(cfg.T, cfg.dt);
  const NoisePath path = brownian_path(cfg.T, cfg.T / static_cast<double>(n), 0.0, cfg.seed);
  return solve_with_driver(ctx, X0, cfg, path.values);
}

Trajectory solve_random_dispersion(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg,
                                   double eps, const NoisePath& m) {
  validate(cfg);
  const std::size_t n = step_count(cfg.T, cfg.dt);
  const double dt = cfg.T / static_cast<double>(n);
  const double needed = cfg.T / (eps * eps);
  if (m.horizon() < needed * (1.0 - 1e-12))
    throw SolverError("dispersion path exhausted: covers " + std::to_string(m.horizon()) + ", needs " +
                      std::to_string(needed));
  return solve_with_driver(ctx, X0, cfg, scaled_driver(m, eps, dt, n));
}

Eigen::VectorXcd ito_euler_coefficients(const Eigen::VectorXd& lambda, const Eigen::VectorXcd& c, double dt, double db) {
  Eigen::VectorXcd out(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) out(k) = c(k) * cd(1.0 - 0.5 * lambda(k) * lambda(k) * dt, -lambda(k) * db);
  return out;
}

GridFunction ito_euler_step(const PropagatorContext& ctx, const GridFunction& f, double dt, double db) {
  return ctx.synthesize(ito_euler_coefficients(ctx.eigenvalues(), ctx.coefficients(f), dt, db));
}

}  // namespace qgwnd
