#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qgwnd {

/// Samples of a function on the uniform grid x0 + i h; zero off the grid.
struct LineFunction {
  double x0 = 0.0;
  double h = 1.0;
  Eigen::VectorXcd values;

  double x(Eigen::Index i) const { return x0 + static_cast<double>(i) * h; }
  Eigen::Index size() const { return values.size(); }
};

/// Uniform output grid for the free propagator.
struct LineGrid {
  double x0 = 0.0;
  double h = 1.0;
  Eigen::Index size = 0;

  double x(Eigen::Index i) const { return x0 + static_cast<double>(i) * h; }
};

/// e^{it d^2/dx^2} g on the whole line, evaluated on `out` by trapezoidal
/// quadrature against the kernel (4 pi z)^{-1/2} exp(-(x-y)^2 / (4 z)) with
/// z = damping |t| + i t. damping = 0 gives the undamped Fresnel kernel.
/// t = 0 returns g resampled on `out`.
LineFunction free_line_propagator(double t, const LineFunction& g, const LineGrid& out, double damping = 1e-4);

/// Linear interpolation of g onto `out`, zero outside g's grid.
LineFunction resample(const LineFunction& g, const LineGrid& out);

/// Same, with the output grid equal to the input grid.
LineFunction free_line_propagator(double t, const LineFunction& g, double damping = 1e-4);

/// Closed form of e^{z d^2/dx^2} exp(-x^2) at x: (1 + 4z)^{-1/2} exp(-x^2 / (1 + 4z)).
std::complex<double> free_gaussian(std::complex<double> z, double x);

}  // namespace qgwnd
