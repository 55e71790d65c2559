#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace qgwnd {

class NoiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NoiseKind { brownian, ou, telegraph, scaled_integral, sampled };

/// A driver or dispersion process sampled on the grid 0, dt, 2 dt, ...
struct NoisePath {
  NoiseKind kind = NoiseKind::sampled;
  double dt = 1.0;
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
  // Parameters of the generating law (unused entries stay 0).
  double mu = 0.0;
  double gamma = 0.0;
  double s = 0.0;
  double eps = 0.0;

  double horizon() const { return values.size() > 0 ? dt * static_cast<double>(values.size() - 1) : 0.0; }
  /// Linear interpolation; throws NoiseError beyond the horizon.
  double at(double t) const;
};

/// Number of steps of size close to dt covering [0, T]; the grid ends at T
/// exactly when T/dt is an integer up to 1e-9.
std::size_t step_count(double T, double dt);

/// Per-trial seed derived from a master seed by splitmix64 mixing.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

/// beta(0) = 0 and independent N(mu dt, dt) increments.
NoisePath brownian_path(double T, double dt, double mu, std::uint64_t seed);
/// Cumulative sum of given increments.
NoisePath brownian_from_increments(double dt, const Eigen::VectorXd& increments);

/// Exact discretization of dm = -gamma m dt + s dW:
///   m_{k+1} = e^{-gamma dt} m_k + s sqrt((1 - e^{-2 gamma dt}) / (2 gamma)) xi_k,
/// with m_0 drawn from the stationary law N(0, s^2 / (2 gamma)).
NoisePath ou_path(double gamma, double s, double T, double dt, std::uint64_t seed);
/// Same recursion driven by given standard normals xi and initial value m0.
NoisePath ou_path_from_normals(double gamma, double s, double dt, double m0, const Eigen::VectorXd& xi);

/// Symmetric two-state process with values +-amplitude flipping at the given
/// rate; started from its stationary (uniform) law.
NoisePath telegraph_path(double rate, double amplitude, double T, double dt, std::uint64_t seed);

/// int_0^t (1/eps) m(s / eps^2) ds = eps int_0^{t/eps^2} m(u) du, integrating
/// the piecewise-linear interpolant of m exactly (trapezoid rule).
double scaled_dispersion_integral(const NoisePath& m, double eps, double t);

/// beta_eps at the times k dt_out, k = 0..steps.
Eigen::VectorXd scaled_driver(const NoisePath& m, double eps, double dt_out, std::size_t steps);

}  // namespace qgwnd
