#include "qgwnd/noise.hpp"

#include <cmath>
#include <random>

namespace qgwnd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw NoiseError(std::string(name) + " must be positive and finite");
}

/// int_0^u of the piecewise-linear interpolant.
class PathIntegral {
 public:
  explicit PathIntegral(const NoisePath& m) : m_(m), cumulative_(m.values.size()) {
    if (m.values.size() < 2) throw NoiseError("noise path needs at least two samples");
    cumulative_(0) = 0.0;
    for (Eigen::Index k = 1; k < m.values.size(); ++k)
      cumulative_(k) = cumulative_(k - 1) + 0.5 * m.dt * (m.values(k - 1) + m.values(k));
  }

  double operator()(double u) const {
    const double horizon = m_.horizon();
    if (u > horizon * (1.0 + 1e-12) + 1e-300)
      throw NoiseError("noise path too short: needs horizon " + std::to_string(u) + ", has " + std::to_string(horizon));
    u = std::min(u, horizon);
    const auto last = m_.values.size() - 1;
    auto k = static_cast<Eigen::Index>(std::floor(u / m_.dt));
    if (k >= last) return cumulative_(last);
    const double r = u - static_cast<double>(k) * m_.dt;
    const double slope = (m_.values(k + 1) - m_.values(k)) / m_.dt;
    return cumulative_(k) + r * m_.values(k) + 0.5 * r * r * slope;
  }

 private:
  const NoisePath& m_;
  Eigen::VectorXd cumulative_;
};

}  // namespace

double NoisePath::at(double t) const {
  if (values.size() == 0) throw NoiseError("empty noise path");
  if (t < 0.0 || t > horizon() * (1.0 + 1e-12)) throw NoiseError("time outside noise path");
  const auto last = values.size() - 1;
  const auto k = static_cast<Eigen::Index>(std::floor(t / dt));
  if (k >= last) return values(last);
  const double r = t / dt - static_cast<double>(k);
  return (1.0 - r) * values(k) + r * values(k + 1);
}

std::size_t step_count(double T, double dt) {
  require_positive(T, "horizon T");
  require_positive(dt, "time step dt");
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * ratio) return static_cast<std::size_t>(rounded);
  return static_cast<std::size_t>(std::ceil(ratio));
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return splitmix64(master ^ (trial * 0x9E3779B97F4A7C15ULL));
}

NoisePath brownian_path(double T, double dt, double mu, std::uint64_t seed) {
  const std::size_t n = step_count(T, dt);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd inc(static_cast<Eigen::Index>(n));
  const double sd = std::sqrt(dt);
  for (auto& x : inc) x = mu * dt + sd * normal(rng);
  NoisePath p = brownian_from_increments(dt, inc);
  p.kind = NoiseKind::brownian;
  p.seed = seed;
  p.mu = mu;
  return p;
}

NoisePath brownian_from_increments(double dt, const Eigen::VectorXd& increments) {
  require_positive(dt, "time step dt");
  NoisePath p;
  p.kind = NoiseKind::brownian;
  p.dt = dt;
  p.values.resize(increments.size() + 1);
  p.values(0) = 0.0;
  for (Eigen::Index k = 0; k < increments.size(); ++k) p.values(k + 1) = p.values(k) + increments(k);
  return p;
}

NoisePath ou_path(double gamma, double s, double T, double dt, std::uint64_t seed) {
  require_positive(gamma, "gamma");
  require_positive(s, "s");
  const std::size_t n = step_count(T, dt);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double m0 = s / std::sqrt(2.0 * gamma) * normal(rng);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
  for (auto& x : xi) x = normal(rng);
  NoisePath p = ou_path_from_normals(gamma, s, dt, m0, xi);
  p.seed = seed;
  return p;
}

NoisePath ou_path_from_normals(double gamma, double s, double dt, double m0, const Eigen::VectorXd& xi) {
  require_positive(gamma, "gamma");
  require_positive(s, "s");
  require_positive(dt, "time step dt");
  NoisePath p;
  p.kind = NoiseKind::ou;
  p.dt = dt;
  p.gamma = gamma;
  p.s = s;
  p.values.resize(xi.size() + 1);
  p.values(0) = m0;
  const double decay = std::exp(-gamma * dt);
  const double scale = s * std::sqrt(-std::expm1(-2.0 * gamma * dt) / (2.0 * gamma));
  for (Eigen::Index k = 0; k < xi.size(); ++k) p.values(k + 1) = decay * p.values(k) + scale * xi(k);
  return p;
}

NoisePath telegraph_path(double rate, double amplitude, double T, double dt, std::uint64_t seed) {
  require_positive(rate, "rate");
  const std::size_t n = step_count(T, dt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  // Probability of an odd number of flips in dt.
  const double flip = 0.5 * (-std::expm1(-2.0 * rate * dt));
  NoisePath p;
  p.kind = NoiseKind::telegraph;
  p.dt = dt;
  p.seed = seed;
  p.gamma = rate;
  p.s = amplitude;
  p.values.resize(static_cast<Eigen::Index>(n + 1));
  double state = uniform(rng) < 0.5 ? amplitude : -amplitude;
  p.values(0) = state;
  for (std::size_t k = 1; k <= n; ++k) {
    if (uniform(rng) < flip) state = -state;
    p.values(static_cast<Eigen::Index>(k)) = state;
  }
  return p;
}

double scaled_dispersion_integral(const NoisePath& m, double eps, double t) {
  require_positive(eps, "eps");
  if (t < 0.0) throw NoiseError("time must be nonnegative");
  if (t == 0.0) return 0.0;
  return eps * PathIntegral(m)(t / (eps * eps));
}

Eigen::VectorXd scaled_driver(const NoisePath& m, double eps, double dt_out, std::size_t steps) {
  require_positive(eps, "eps");
  const PathIntegral integral(m);
  Eigen::VectorXd beta(static_cast<Eigen::Index>(steps + 1));
  beta(0) = 0.0;
  for (std::size_t k = 1; k <= steps; ++k)
    beta(static_cast<Eigen::Index>(k)) = eps * integral(static_cast<double>(k) * dt_out / (eps * eps));
  return beta;
}

}  // namespace qgwnd
