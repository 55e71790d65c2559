#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "qgwnd/mesh.hpp"

namespace qgwnd {

/// Time-indexed solver output. Scalars are recorded at every time step;
/// full states only at the steps listed in `state_steps`.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> l2;
  std::vector<double> form;
  std::vector<double> linf;
  std::vector<double> lp;          // L^p_x norm with the run's p
  std::vector<double> running_rp;  // L^r_{[0,t]} L^p_x prefix norm
  double r = std::numeric_limits<double>::infinity();
  double p = 2.0;

  std::vector<std::size_t> state_steps;
  std::vector<GridFunction> states;

  bool stopped = false;  // blow-up ceiling reached before the horizon
  double stop_time = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;

  std::size_t size() const { return times.size(); }
  const GridFunction& final_state() const;
};

/// (int_0^T g(t)^r dt)^{1/r} by the trapezoid rule on the samples g(t_k);
/// r = inf takes the maximum.
double time_norm(const std::vector<double>& times, const std::vector<double>& values, double r);

/// Prefix norms: entry k is time_norm over t_0..t_k.
std::vector<double> prefix_time_norms(const std::vector<double>& times, const std::vector<double>& values, double r);

/// L^r_t L^p_x norm of the stored states (uniform time spacing required).
double space_time_norm(const Trajectory& traj, double r, double p);

/// CSV columns t,l2_norm,form_norm,linf_norm,running_rp_norm.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Long-format state dump: t,edge,node,x,re,im for every stored state.
void write_snapshots_csv(std::ostream& out, const Trajectory& traj);

}  // namespace qgwnd
