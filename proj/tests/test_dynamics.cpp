#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "qgwnd/picard.hpp"
#include "qgwnd/solver.hpp"
#include "qgwnd/statistics.hpp"

using namespace qgwnd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const PropagatorContext> small_star(CouplingKind kind = CouplingKind::kirchhoff, double a = 0.0,
                                                    double h = 0.1, double L = 10.0) {
  MeshOptions o;
  o.h = h;
  o.L_trunc = L;
  return make_context(discretize(std::make_shared<const MetricGraph>(make_star(3)), o), {standard_coupling(kind, 3, a)});
}

GridFunction gaussian(const PropagatorContext& ctx, double amplitude = 1.0, double width = 1.0) {
  return ctx.op().project_domain(GridFunction::sample(ctx.mesh_ptr(), [&](std::size_t e, double x) {
    return cd(amplitude * std::exp(-std::pow(x / width, 2)) * (1.0 + 0.3 * static_cast<double>(e)));
  }));
}

NoisePath constant_path(double value, double dt, double horizon) {
  NoisePath m;
  m.dt = dt;
  m.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(std::llround(horizon / dt)) + 1, value);
  return m;
}

double max_rel_drift(const Trajectory& traj) {
  double d = 0.0;
  for (double v : traj.l2) d = std::max(d, std::abs(v - traj.l2.front()) / traj.l2.front());
  return d;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("Brownian path") {
    const NoisePath a = brownian_path(1.0, 0.01, 0.0, 42);
    const NoisePath b = brownian_path(1.0, 0.01, 0.0, 42);
    CHECK(a.values(0) == 0.0);
    CHECK(a.values.size() == 101);
    CHECK(a.horizon() == doctest::Approx(1.0));
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.values - brownian_path(1.0, 0.01, 0.0, 43).values).cwiseAbs().maxCoeff() > 0.0);

    std::vector<double> end, mean_end;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      end.push_back(brownian_path(2.0, 2.0, 0.0, trial_seed(7, s)).values(1));
      mean_end.push_back(brownian_path(2.0, 0.5, 0.5, trial_seed(8, s)).values(4));
    }
    const Estimate v = variance_estimate(end);
    CHECK(std::abs(v.value - 2.0) <= 3.0 * v.stderr_value);
    const Estimate m = mean_estimate(mean_end);
    CHECK(std::abs(m.value - 1.0) <= 3.0 * m.stderr_value);
  }

  TEST_CASE("OU stationary variance and autocorrelation") {
    const double gamma = 2.0, s = 1.5;
    const NoisePath wide = ou_path(gamma, s, 1e6, 10.0, 5);
    std::vector<double> x(wide.values.data(), wide.values.data() + wide.values.size());
    const Estimate v = variance_estimate(x);
    CHECK(x.size() > 100000);
    CHECK(std::abs(v.value - s * s / (2 * gamma)) <= 3.0 * v.stderr_value);

    const double dt = 0.05;
    const NoisePath p = ou_path(gamma, s, 5e4, dt, 6);
    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k + 1 < p.values.size(); ++k) {
      num += p.values(k) * p.values(k + 1);
      den += p.values(k) * p.values(k);
    }
    CHECK(num / den == doctest::Approx(std::exp(-gamma * dt)).epsilon(0.01));
    CHECK((ou_path(gamma, s, 10.0, dt, 9).values - ou_path(gamma, s, 10.0, dt, 9).values).norm() == 0.0);
  }

  TEST_CASE("scaled dispersion integral") {
    CHECK(scaled_dispersion_integral(constant_path(0.0, 0.1, 200.0), 0.1, 1.0) == 0.0);
    CHECK(scaled_dispersion_integral(constant_path(1.0, 0.1, 200.0), 0.1, 1.0) == doctest::Approx(1.0 / 0.1));
    const NoisePath m = ou_path(1.0, 1.0, 200.0, 0.01, 3);
    NoisePath m3 = m;
    m3.values *= 3.0;
    const double b = scaled_dispersion_integral(m, 0.1, 1.0);
    CHECK(scaled_dispersion_integral(m3, 0.1, 1.0) == doctest::Approx(3.0 * b).epsilon(1e-13));
    CHECK_THROWS_AS(scaled_dispersion_integral(m, 0.01, 1.0), NoiseError);
    const Eigen::VectorXd driver = scaled_driver(m, 0.1, 0.1, 10);
    CHECK(driver(10) == doctest::Approx(b).epsilon(1e-13));
  }

  TEST_CASE("nonlinear phase step") {
    const auto ctx = small_star();
    const GridFunction zero(ctx->mesh_ptr());
    CHECK(lp_norm(nonlinear_phase_step(zero, 0.5, 1.0, {}), 2.0) == 0.0);
    const GridFunction one = GridFunction::sample(ctx->mesh_ptr(), [](std::size_t, double) { return cd(1.0); });
    const GridFunction out = nonlinear_phase_step(one, 0.5, 1.0, {});
    CHECK((out.values.array() - std::polar(1.0, 0.5)).abs().maxCoeff() <= 1e-15);
    testing::Rng rng(1);
    const GridFunction f = testing::random_function(rng, ctx->mesh_ptr());
    for (const Truncation& t : {Truncation{}, Truncation{TruncationKind::pointwise, 0.7}}) {
      const GridFunction g = nonlinear_phase_step(f, 0.8, 1.5, t);
      CHECK((g.values.cwiseAbs() - f.values.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }

  TEST_CASE("theta cutoff") {
    CHECK(theta(0.0) == 1.0);
    CHECK(theta(0.5) == 1.0);
    CHECK(theta(1.0) == 1.0);
    CHECK(theta(2.0) == 0.0);
    CHECK(theta(3.0) == 0.0);
    for (double x = 1.0; x < 2.0; x += 0.01) CHECK(theta(x + 0.01) <= theta(x));

    const auto ctx = small_star();
    const GridFunction one = GridFunction::sample(ctx->mesh_ptr(), [](std::size_t, double) { return cd(1.0); });
    Trajectory traj;
    for (std::size_t k = 0; k <= 10; ++k) {
      traj.times.push_back(0.1 * static_cast<double>(k));
      traj.state_steps.push_back(k);
      traj.states.push_back(one);
    }
    const double c = lp_norm(one, 4.0);  // constant in time, so the prefix norm on [0, 1] is c
    CHECK(theta_R(traj, 4.0, 4.0, 2.0 * c, 1.0) == 1.0);
    CHECK(theta_R(traj, 4.0, 4.0, c / 3.0, 1.0) == 0.0);
  }

  TEST_CASE("theta_R is nonincreasing along a trajectory") {
    const auto ctx = small_star();
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.5;
    cfg.r = 4;
    cfg.p = 4;
    cfg.truncation = {TruncationKind::norm, 0.4};
    cfg.save_every = 1;
    cfg.seed = 3;
    const Trajectory traj = solve_wnd(*ctx, gaussian(*ctx), cfg);
    double prev = 1.0;
    for (double t : traj.times) {
      const double th = theta_R(traj, cfg.r, cfg.p, cfg.truncation.R, t);
      CHECK(th <= prev);
      prev = th;
    }
    CHECK(prev < 1.0);
  }

  TEST_CASE("configuration validation") {
    SolverConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    CHECK(admissible(4, 4));
    CHECK(admissible(kInf, 2));
    CHECK_FALSE(admissible(kInf, 4));
    CHECK_FALSE(admissible(8, 8));
    cfg.r = 8;
    cfg.p = 8;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = SolverConfig{};
    cfg.sigma = 2.5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = SolverConfig{};
    cfg.truncation = {TruncationKind::norm, 1.0};
    cfg.r = 4;
    cfg.p = 3;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.p = 4;
    cfg.r = 8;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.r = 6;
    CHECK_NOTHROW(validate(cfg));
    cfg.dt = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  }

  TEST_CASE("splitting step") {
    const auto ctx = small_star();
    const GridFunction f = gaussian(*ctx, 1.2);
    SolverConfig cfg;
    cfg.nonlinearity = 0.0;
    CHECK(lp_norm(splitting_step(*ctx, f, 0.3, 0.01, cfg) - stochastic_propagator(*ctx, 0.3, f), 2.0) <= 1e-14);
    cfg.nonlinearity = 1.0;
    const GridFunction phase_only = splitting_step(*ctx, f, 0.0, 0.01, cfg);
    CHECK(lp_norm(phase_only - nonlinear_phase_step(f, 0.01, 1.0, {}), 2.0) <= 1e-14);
    for (bool strang : {false, true}) {
      cfg.strang = strang;
      const GridFunction g = splitting_step(*ctx, f, 0.2, 0.01, cfg);
      CHECK(std::abs(lp_norm(g, 2.0) / lp_norm(f, 2.0) - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("solve_wnd examples") {
    const auto ctx = small_star();
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.seed = 11;
    const Trajectory zero = solve_wnd(*ctx, GridFunction(ctx->mesh_ptr()), cfg);
    CHECK(*std::max_element(zero.l2.begin(), zero.l2.end()) == 0.0);
    CHECK(zero.final_state().values.cwiseAbs().maxCoeff() == 0.0);
    const Trajectory traj = solve_wnd(*ctx, gaussian(*ctx), cfg);
    CHECK(traj.size() == 1001);
    CHECK_FALSE(traj.stopped);
    CHECK(max_rel_drift(traj) <= 1e-8);
  }

  TEST_CASE("trajectory stored norms") {
    const auto ctx = small_star(CouplingKind::delta, -1.0);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.3;
    cfg.r = 4;
    cfg.p = 4;
    cfg.save_every = 1;
    cfg.seed = 2;
    const Trajectory traj = solve_wnd(*ctx, gaussian(*ctx), cfg);
    REQUIRE(traj.states.size() == traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (k > 0) CHECK(traj.times[k] > traj.times[k - 1]);
      const GridFunction& u = traj.states[k];
      CHECK(std::abs(traj.l2[k] - lp_norm(u, 2.0)) <= 1e-12 * traj.l2[k]);
      CHECK(std::abs(traj.lp[k] - lp_norm(u, 4.0)) <= 1e-12 * traj.lp[k]);
      CHECK(std::abs(traj.linf[k] - lp_norm(u, kInf)) <= 1e-12 * traj.linf[k]);
      CHECK(std::abs(traj.form[k] - form_norm(ctx->spectral(), ctx->op(), u)) <= 1e-12 * traj.form[k]);
    }
    const std::vector<double> pre = prefix_time_norms(traj.times, traj.lp, 4.0);
    for (std::size_t k = 0; k < traj.size(); ++k) CHECK(std::abs(traj.running_rp[k] - pre[k]) <= 1e-12 * (1e-300 + pre[k]));
    CHECK(space_time_norm(traj, 4.0, 4.0) == doctest::Approx(traj.running_rp.back()).epsilon(1e-12));
  }

  TEST_CASE("self-convergence on a shared Brownian path") {
    const auto ctx = small_star();
    const GridFunction X0 = gaussian(*ctx);
    const double T = 0.25, fine = T / 1024;
    const NoisePath path = brownian_path(T, fine, 0.0, 17);
    std::vector<GridFunction> finals;
    for (std::size_t stride : {8, 4, 2, 1}) {
      SolverConfig cfg;
      cfg.T = T;
      cfg.dt = fine * static_cast<double>(stride);
      Eigen::VectorXd beta(static_cast<Eigen::Index>(1024 / stride + 1));
      for (Eigen::Index k = 0; k < beta.size(); ++k) beta(k) = path.values(k * static_cast<Eigen::Index>(stride));
      finals.push_back(solve_with_driver(*ctx, X0, cfg, beta).final_state());
    }
    std::vector<double> diffs;
    for (std::size_t k = 0; k + 1 < finals.size(); ++k) diffs.push_back(lp_norm(finals[k] - finals[k + 1], 2.0));
    for (double d : diffs) MESSAGE(d);
    CHECK(count_non_decreases(diffs) == 0);
  }

  TEST_CASE("random dispersion") {
    const auto ctx = small_star();
    const GridFunction X0 = gaussian(*ctx, 1.3);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.5;
    cfg.save_every = 1;
    const Trajectory still = solve_random_dispersion(*ctx, X0, cfg, 0.1, constant_path(0.0, 0.01, 50.0));
    for (const auto& u : still.states) CHECK((u.values.cwiseAbs() - X0.values.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::VectorXd t(51);
    for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = 0.01 * static_cast<double>(k);
    const Trajectory unit = solve_random_dispersion(*ctx, X0, cfg, 1.0, constant_path(1.0, 0.01, 0.5));
    const Trajectory direct = solve_with_driver(*ctx, X0, cfg, t);
    CHECK(lp_norm(unit.final_state() - direct.final_state(), 2.0) <= 1e-12);

    CHECK_THROWS_AS(solve_random_dispersion(*ctx, X0, cfg, 0.1, constant_path(1.0, 0.01, 10.0)), SolverError);

    cfg.truncation = {TruncationKind::norm, 1.0};
    cfg.r = 4;
    cfg.p = 4;
    const Trajectory trunc = solve_random_dispersion(*ctx, X0, cfg, 0.1, ou_path(1.0, 1.0, 50.0, 0.01, 4));
    CHECK(max_rel_drift(trunc) <= 1e-8);
  }

  TEST_CASE("blow-up detection") {
    const auto ctx = small_star();
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.5;
    cfg.nonlinearity = 0.0;
    cfg.blowup_factor = 1.5;
    // A datum that refocuses under the linear flow with driver beta(t) = t.
    const GridFunction g = gaussian(*ctx, 1.0, 0.4);
    const GridFunction X0 = schrodinger_group(*ctx, -0.3, g);
    Eigen::VectorXd t(51);
    for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = 0.01 * static_cast<double>(k);
    const Trajectory traj = solve_with_driver(*ctx, X0, cfg, t);
    REQUIRE(traj.stopped);
    CHECK(traj.stop_time > 0.0);
    CHECK(traj.stop_time <= 0.3 + 1e-12);
    CHECK_FALSE(traj.stop_reason.empty());
    CHECK(traj.final_state().values.cwiseAbs().maxCoeff() > 1.5 * X0.values.cwiseAbs().maxCoeff());

    cfg.truncation = {TruncationKind::pointwise, 10.0};
    CHECK_FALSE(solve_with_driver(*ctx, X0, cfg, t).stopped);
  }

  TEST_CASE("truncation consistency") {
    const auto ctx = small_star();
    const GridFunction X0 = gaussian(*ctx);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.5;
    cfg.r = 4;
    cfg.p = 4;
    cfg.seed = 8;
    const Trajectory free = solve_wnd(*ctx, X0, cfg);
    cfg.truncation = {TruncationKind::norm, 10.0 * free.running_rp.back()};
    const Trajectory trunc = solve_wnd(*ctx, X0, cfg);
    CHECK(lp_norm(free.final_state() - trunc.final_state(), 2.0) <= 1e-13);
    cfg.truncation = {TruncationKind::pointwise, 10.0 * std::pow(*std::max_element(free.linf.begin(), free.linf.end()), 2)};
    CHECK(lp_norm(free.final_state() - solve_wnd(*ctx, X0, cfg).final_state(), 2.0) <= 1e-13);
  }

  TEST_CASE("Picard solver") {
    const auto ctx = small_star();
    const GridFunction X0 = gaussian(*ctx);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.25;
    cfg.r = 4;
    cfg.p = 4;
    cfg.truncation = {TruncationKind::norm, 4.0};
    const Eigen::VectorXd driver = brownian_path(cfg.T, cfg.dt, 0.0, 5).values;

    SolverConfig linear = cfg;
    linear.nonlinearity = 0.0;
    const PicardResult lin = picard_solve(*ctx, X0, driver, linear);
    REQUIRE(lin.iterations.size() == 1);
    CHECK(lin.iterations[0] == 1);
    const GridFunction exact = stochastic_propagator(*ctx, driver(driver.size() - 1), X0);
    CHECK(lp_norm(lin.trajectory.final_state() - exact, 2.0) <= 1e-12);

    const PicardResult zero = picard_solve(*ctx, GridFunction(ctx->mesh_ptr()), driver, cfg);
    CHECK(zero.trajectory.final_state().values.cwiseAbs().maxCoeff() == 0.0);

    const PicardResult full = picard_solve(*ctx, X0, driver, cfg);
    CHECK(full.halvings == 0);
    const GridFunction split = solve_with_driver(*ctx, X0, cfg, driver).final_state();
    CHECK(lp_norm(full.trajectory.final_state() - split, 2.0) <= 1e-2 * lp_norm(X0, 2.0));

    CHECK_THROWS_AS(picard_solve(*ctx, X0, driver.head(5), cfg), SolverError);
  }

  TEST_CASE("Ito-Euler step") {
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(1, 2.0);
    const Eigen::VectorXcd c = Eigen::VectorXcd::Constant(1, cd(0.5, -0.25));
    cd expected = c(0);
    Eigen::VectorXcd x = c;
    testing::Rng rng(1);
    for (int k = 0; k < 50; ++k) {
      const double db = testing::uniform(rng, -0.1, 0.1);
      x = ito_euler_coefficients(lambda, x, 1e-3, db);
      expected *= cd(1.0 - 0.5 * 4.0 * 1e-3, -2.0 * db);
    }
    CHECK(std::abs(x(0) - expected) <= 1e-15);

    const auto ctx = small_star();
    const GridFunction f = gaussian(*ctx);
    std::vector<double> err;
    for (double dt : {1e-4, 1e-5}) err.push_back(lp_norm(ito_euler_step(*ctx, f, dt, 0.0) - f, 2.0));
    CHECK(err[1] < err[0] / 5.0);
  }
}
