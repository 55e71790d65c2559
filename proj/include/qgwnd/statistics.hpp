#pragma once

#include <stdexcept>
#include <vector>

namespace qgwnd {

class StatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Least-squares fit of log y against log t. Needs at least 5 points with
/// t, y > 0 and at least two distinct t.
SlopeFit fit_decay_slope(const std::vector<double>& t, const std::vector<double>& y);

/// Ordinary least squares of y on x (same requirements on x, at least 3 points).
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct Estimate {
  double value = 0.0;
  double stderr_value = 0.0;
};

/// Sample mean and its standard error.
Estimate mean_estimate(const std::vector<double>& x);

/// Unbiased sample variance with the standard error sqrt((m4 - s^4) / n).
Estimate variance_estimate(const std::vector<double>& x);

/// Observed orders log(e_k / e_{k+1}) / log(ratio) of an error sequence under
/// step refinement by `ratio`.
std::vector<double> observed_orders(const std::vector<double>& errors, double ratio = 2.0);

/// Number of k with x_{k+1} >= x_k (0 for a strictly decreasing sequence).
int count_non_decreases(const std::vector<double>& x);

}  // namespace qgwnd
