#include "qgwnd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qgwnd/format.hpp"

namespace qgwnd {

const GridFunction& Trajectory::final_state() const {
  if (states.empty()) throw std::logic_error("trajectory has no stored states");
  return states.back();
}

double time_norm(const std::vector<double>& times, const std::vector<double>& values, double r) {
  if (times.empty() || times.size() != values.size()) throw std::invalid_argument("time_norm: empty or mismatched series");
  if (std::isinf(r)) return *std::max_element(values.begin(), values.end());
  if (!(r >= 1.0)) throw std::invalid_argument("time_norm requires r >= 1");
  double sum = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k)
    sum += 0.5 * (times[k] - times[k - 1]) * (std::pow(values[k - 1], r) + std::pow(values[k], r));
  return std::pow(sum, 1.0 / r);
}

std::vector<double> prefix_time_norms(const std::vector<double>& times, const std::vector<double>& values, double r) {
  if (times.size() != values.size()) throw std::invalid_argument("prefix_time_norms: mismatched series");
  std::vector<double> out(times.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::isinf(r)) {
      acc = std::max(acc, values[k]);
      out[k] = acc;
    } else {
      if (k > 0) acc += 0.5 * (times[k] - times[k - 1]) * (std::pow(values[k - 1], r) + std::pow(values[k], r));
      out[k] = std::pow(acc, 1.0 / r);
    }
  }
  return out;
}

double space_time_norm(const Trajectory& traj, double r, double p) {
  if (traj.states.empty()) throw std::invalid_argument("space_time_norm of an empty trajectory");
  std::vector<double> t, g;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    t.push_back(traj.times.at(traj.state_steps.at(i)));
    g.push_back(lp_norm(traj.states[i], p));
  }
  if (t.size() > 2) {
    const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t k = 1; k < t.size(); ++k)
      if (std::abs(t[k] - t[k - 1] - h) > 1e-9 * std::max(1.0, h))
        throw std::invalid_argument("space_time_norm requires a uniform time grid");
  }
  return time_norm(t, g, r);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,l2_norm,form_norm,linf_norm,running_rp_norm\n";
  for (std::size_t k = 0; k < traj.size(); ++k)
    out << format_double(traj.times[k]) << ',' << format_double(traj.l2[k]) << ',' << format_double(traj.form[k]) << ','
        << format_double(traj.linf[k]) << ',' << format_double(traj.running_rp[k]) << '\n';
}

void write_snapshots_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,edge,node,x,re,im\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const GridFunction& f = traj.states[i];
    const std::string t = format_double(traj.times[traj.state_steps[i]]);
    for (std::size_t e = 0; e < f.mesh->edges().size(); ++e) {
      const EdgeGrid& g = f.mesh->edge(e);
      for (std::size_t n = 0; n < g.nodes; ++n) {
        const cd v = f.values(static_cast<Eigen::Index>(g.offset + n));
        out << t << ',' << e << ',' << n << ',' << format_double(g.x(n)) << ',' << format_double(v.real()) << ','
            << format_double(v.imag()) << '\n';
      }
    }
  }
}

}  // namespace qgwnd
