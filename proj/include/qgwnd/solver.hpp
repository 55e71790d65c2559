#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "qgwnd/noise.hpp"
#include "qgwnd/propagation.hpp"
#include "qgwnd/trajectory.hpp"

namespace qgwnd {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TruncationKind { none, norm, pointwise };

/// none: F(u) = |u|^{2 sigma} u.
/// norm: F(u) = theta(|u|_{L^r_{[0,t]} L^p_x} / R) |u|^{2 sigma} u.
/// pointwise: F(u) = |u|^{2 sigma} u theta(|u|^2 / R).
struct Truncation {
  TruncationKind kind = TruncationKind::none;
  double R = std::numeric_limits<double>::infinity();
};

enum class Scheme { splitting, picard, ito_euler };

struct SolverConfig {
  double sigma = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  Truncation truncation;
  double r = std::numeric_limits<double>::infinity();
  double p = 2.0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::splitting;
  bool strang = false;
  /// Multiplies the power nonlinearity; 0 gives the linear equation.
  double nonlinearity = 1.0;
  /// Store every k-th state; 0 stores only the initial and final states.
  std::size_t save_every = 0;
  /// Untruncated runs stop once max|u| exceeds this multiple of max|u_0|.
  double blowup_factor = 1e6;
};

std::string to_string(TruncationKind kind);
std::string to_string(Scheme scheme);
TruncationKind truncation_from_string(const std::string& name);
Scheme scheme_from_string(const std::string& name);

/// r = inf with p = 2, or 2 <= r, p < inf with 2/r + 1/p > 1/2.
bool admissible(double r, double p);

/// Throws ConfigError on a bad configuration. Norm truncation additionally
/// requires p = 2 sigma + 2 and 2 sigma + 2 <= r < 4 (sigma + 1) / sigma.
void validate(const SolverConfig& cfg);

/// Cutoff equal to 1 on [0, 1], 0 on [2, inf) and a C^2 quintic smoothstep
/// in between.
double theta(double x);

/// theta of the L^r_{[0,t]} L^p_x norm of the stored prefix, divided by R.
/// Needs the states stored at every step up to t.
double theta_R(const Trajectory& traj, double r, double p, double R, double t);

/// Exact flow of du/dt = i g(|u|^2) u for time tau: u e^{i tau g(|u|^2)} with
/// g(rho) = scale rho^sigma, times theta(rho / R) under pointwise truncation.
GridFunction nonlinear_phase_step(const GridFunction& f, double tau, double sigma, const Truncation& trunc,
                                  double scale = 1.0);

/// One Lie step: nonlinear phase for dt after U(db); with cfg.strang the
/// linear flow is split in halves around the phase. theta_factor multiplies
/// the nonlinearity (the norm-truncation cutoff at the left endpoint).
GridFunction splitting_step(const PropagatorContext& ctx, const GridFunction& f, double db, double dt,
                            const SolverConfig& cfg, double theta_factor = 1.0);

/// Appends per-step scalars (and states when due) to a trajectory.
class TrajectoryRecorder {
 public:
  TrajectoryRecorder(const PropagatorContext& ctx, const SolverConfig& cfg, Trajectory& traj);
  void record(double t, std::size_t step, const GridFunction& u, bool force_store);
  /// Stores u as the last state unless step is already stored.
  void store_final(std::size_t step, const GridFunction& u);

 private:
  const PropagatorContext& ctx_;
  const SolverConfig& cfg_;
  Trajectory& traj_;
  double acc_ = 0.0;
  double last_t_ = 0.0;
  double last_lp_ = 0.0;
};

/// Splitting solver for a driver given by its values beta(k dt), k = 0..n,
/// n = step_count(T, dt).
Trajectory solve_with_driver(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg,
                             const Eigen::VectorXd& beta);

/// White-noise dispersion: Brownian driver drawn from cfg.seed.
Trajectory solve_wnd(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg);

/// Random dispersion with driver beta_eps(t) = eps int_0^{t/eps^2} m.
Trajectory solve_random_dispersion(const PropagatorContext& ctx, const GridFunction& X0, const SolverConfig& cfg,
                                   double eps, const NoisePath& m);

/// c_k <- c_k (1 - lambda_k^2 dt / 2 - i lambda_k db) on the eigen-coefficients.
Eigen::VectorXcd ito_euler_coefficients(const Eigen::VectorXd& lambda, const Eigen::VectorXcd& c, double dt, double db);
GridFunction ito_euler_step(const PropagatorContext& ctx, const GridFunction& f, double dt, double db);

}  // namespace qgwnd
