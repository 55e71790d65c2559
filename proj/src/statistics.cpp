#include "qgwnd/statistics.hpp"

#include <algorithm>
#include <cmath>

namespace qgwnd {

SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatisticsError("fit_line: mismatched series");
  const std::size_t n = x.size();
  if (n < 3) throw StatisticsError("fit_line: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw StatisticsError("fit_line: non-finite sample");
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw StatisticsError("fit_line: degenerate abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

SlopeFit fit_decay_slope(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw StatisticsError("fit_decay_slope: mismatched series");
  if (t.size() < 5) throw StatisticsError("fit_decay_slope: need at least 5 points");
  std::vector<double> lx(t.size()), ly(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(y[i] > 0.0)) throw StatisticsError("fit_decay_slope: samples must be positive");
    lx[i] = std::log(t[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw StatisticsError("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Estimate mean_estimate(const std::vector<double>& x) {
  if (x.empty()) throw StatisticsError("mean_estimate: empty sample");
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  Estimate e;
  e.value = m;
  e.stderr_value = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return e;
}

Estimate variance_estimate(const std::vector<double>& x) {
  if (x.size() < 2) throw StatisticsError("variance_estimate: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  Estimate e;
  e.value = m2 / (n - 1.0);
  m2 /= n;
  m4 /= n;
  e.stderr_value = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return e;
}

std::vector<double> observed_orders(const std::vector<double>& errors, double ratio) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log(errors[k] / errors[k + 1]) / std::log(ratio));
  return out;
}

int count_non_decreases(const std::vector<double>& x) {
  int c = 0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    if (!(x[k + 1] < x[k])) ++c;
  return c;
}

}  // namespace qgwnd
