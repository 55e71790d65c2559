#include "qgwnd/free_line.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qgwnd {

namespace {

using cd = std::complex<double>;

cd kernel(cd z, double d) { return std::exp(-d * d / (4.0 * z)) / std::sqrt(4.0 * std::numbers::pi * z); }

}  // namespace

LineFunction resample(const LineFunction& g, const LineGrid& out) {
  LineFunction r{out.x0, out.h, Eigen::VectorXcd::Zero(out.size)};
  const Eigen::Index n = g.size();
  for (Eigen::Index i = 0; i < out.size; ++i) {
    const double s = (out.x(i) - g.x0) / g.h;
    const double fl = std::floor(s + 1e-9);
    const auto j = static_cast<Eigen::Index>(fl);
    const double frac = std::max(0.0, s - fl);
    if (j < 0 || j >= n) continue;
    if (j == n - 1 || frac < 1e-9)
      r.values(i) = g.values(j);
    else
      r.values(i) = (1.0 - frac) * g.values(j) + frac * g.values(j + 1);
  }
  return r;
}

LineFunction free_line_propagator(double t, const LineFunction& g, const LineGrid& out, double damping) {
  if (!(g.h > 0.0) || !(out.h > 0.0)) throw std::invalid_argument("line grid spacing must be positive");
  if (t == 0.0) return resample(g, out);
  const cd z(damping * std::abs(t), t);
  const Eigen::Index n = g.size();
  LineFunction result{out.x0, out.h, Eigen::VectorXcd::Zero(out.size)};
  if (n == 0 || out.size == 0) return result;

  Eigen::VectorXcd wg = g.h * g.values;
  wg(0) *= 0.5;
  wg(n - 1) *= 0.5;

  // With equal spacings and lattice-aligned origins the kernel only depends on
  // the index difference, so it is tabulated once.
  const double shift = (out.x0 - g.x0) / g.h;
  const double rounded = std::round(shift);
  if (std::abs(out.h - g.h) <= 1e-12 * g.h && std::abs(shift - rounded) <= 1e-9) {
    const auto s = static_cast<Eigen::Index>(rounded);
    const Eigen::Index lo = s - (n - 1);
    const Eigen::Index hi = s + out.size - 1;
    Eigen::VectorXcd table(hi - lo + 1);
    for (Eigen::Index d = lo; d <= hi; ++d) table(d - lo) = kernel(z, static_cast<double>(d) * g.h);
    for (Eigen::Index i = 0; i < out.size; ++i) {
      cd acc(0.0);
      const Eigen::Index base = i + s - lo;
      for (Eigen::Index j = 0; j < n; ++j) acc += table(base - j) * wg(j);
      result.values(i) = acc;
    }
    return result;
  }
  for (Eigen::Index i = 0; i < out.size; ++i) {
    cd acc(0.0);
    const double xi = out.x(i);
    for (Eigen::Index j = 0; j < n; ++j) acc += kernel(z, xi - g.x(j)) * wg(j);
    result.values(i) = acc;
  }
  return result;
}

LineFunction free_line_propagator(double t, const LineFunction& g, double damping) {
  return free_line_propagator(t, g, LineGrid{g.x0, g.h, g.size()}, damping);
}

std::complex<double> free_gaussian(std::complex<double> z, double x) {
  const cd denom = 1.0 + 4.0 * z;
  return std::exp(-x * x / denom) / std::sqrt(denom);
}

}  // namespace qgwnd
