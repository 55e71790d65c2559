#pragma once

#include <vector>

#include "qgwnd/solver.hpp"

namespace qgwnd {

struct PicardOptions {
  double tol = 1e-11;
  int max_iter = 200;
  /// Initial window length in steps; 0 means the whole horizon.
  std::size_t window_steps = 0;
  /// Give up after this many window halvings.
  int max_halvings = 16;
};

struct PicardResult {
  Trajectory trajectory;
  std::vector<int> iterations;  // per accepted window
  int halvings = 0;
};

/// Fixed point of the mild formulation
///   u(t) = S(t, 0) u_0 + i int_0^t S(t, s) F(u(s)) ds,  S(t, s) = U(n(t) - n(s)),
/// on the time grid k dt. The Duhamel integral is evaluated in eigen-coordinates
/// by the trapezoid rule on e^{i n(s) lambda} F^(s). Iterates start from the
/// free evolution and stop when sup_t |u^{k+1}(t) - u^k(t)|_2 <= tol. When the
/// iteration fails to contract the window is halved and retried.
PicardResult picard_solve(const PropagatorContext& ctx, const GridFunction& X0, const Eigen::VectorXd& driver,
                          const SolverConfig& cfg, const PicardOptions& options = {});

}  // namespace qgwnd
