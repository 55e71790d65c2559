#include "qgwnd/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

namespace qgwnd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Setup {
  std::shared_ptr<const MetricGraph> graph;
  std::shared_ptr<const Mesh> mesh;
  std::vector<VertexCoupling> couplings;
  std::shared_ptr<const PropagatorContext> ctx;
  GridFunction X0;
};

Setup make_setup(const ExperimentConfig& cfg, const MeshOptions& mesh_options) {
  Setup s;
  s.graph = config_graph(cfg);
  s.mesh = discretize(s.graph, mesh_options);
  s.couplings = config_couplings(*s.graph, cfg.couplings);
  s.ctx = make_context(s.mesh, s.couplings);
  s.X0 = build_initial(s.mesh, cfg.initial, s.couplings);
  return s;
}

Setup make_setup(const ExperimentConfig& cfg) { return make_setup(cfg, cfg.mesh); }

nlohmann::json base_parameters(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["graph"] = cfg.graph;
  j["couplings"] = cfg.couplings;
  j["mesh"] = {{"h", cfg.mesh.h}, {"L_trunc", cfg.mesh.L_trunc},
               {"far_end", cfg.mesh.far_end == FarEnd::dirichlet ? "dirichlet" : "neumann"}};
  j["initial"] = cfg.initial;
  j["trials"] = cfg.trials;
  j["params"] = cfg.params;
  return j;
}

nlohmann::json solver_parameters(const SolverConfig& s) {
  nlohmann::json j;
  j["sigma"] = s.sigma;
  j["dt"] = s.dt;
  j["T"] = s.T;
  j["truncation"] = to_string(s.truncation.kind);
  if (std::isfinite(s.truncation.R)) j["R"] = s.truncation.R;
  j["r"] = std::isinf(s.r) ? nlohmann::json("inf") : nlohmann::json(s.r);
  j["p"] = s.p;
  j["scheme"] = to_string(s.scheme);
  j["strang"] = s.strang;
  j["nonlinearity"] = s.nonlinearity;
  return j;
}

ReportRecord new_record(const ExperimentConfig& cfg) {
  ReportRecord r;
  r.kind = to_string(cfg.kind);
  r.parameters = base_parameters(cfg);
  r.seed = cfg.seed;
  return r;
}

double param_number(const nlohmann::json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) return kInf;
  if (!v.is_number()) throw ConfigError(std::string("params.") + key + " must be a number");
  return v.get<double>();
}

std::vector<double> param_list(const nlohmann::json& params, const char* key) {
  try {
    return params.at(key).get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("params.") + key + " must be a list of numbers");
  }
}

// Per-trial seed streams that do not collide across sub-experiments.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t trial) {
  return trial_seed(trial_seed(master, 0x5EED0000ULL + stream), trial);
}

double ratio_or_zero(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
  return num / den;
}

// --- spectrum ---------------------------------------------------------------

ExperimentResult run_spectrum(const ExperimentConfig& cfg) {
  ExperimentResult out;
  auto graph = config_graph(cfg);
  auto mesh = discretize(graph, cfg.mesh);
  auto couplings = config_couplings(*graph, cfg.couplings);
  auto op = assemble(mesh, couplings);
  EigenOptions eo;
  eo.vectors = cfg.params.value("vectors", false);
  const SpectralDecomposition sd = eigendecompose(*op, eo);

  int predicted = 0;
  for (const auto& c : couplings) predicted += count_negative_eigs_predicted(c.A(), c.B());
  const auto discrete = static_cast<double>(sd.point.size());

  ReportRecord rec = new_record(cfg);
  rec.set("n_neg_predicted", predicted);
  rec.set("n_neg_discrete", discrete);
  rec.set("lambda_min", sd.eigenvalues(0));
  rec.set("modes", static_cast<double>(sd.modes()));
  rec.set("split_exact", sd.split_exact ? 1.0 : 0.0);
  if (graph->is_star()) rec.check("negative_count_matches_prediction", discrete - predicted, 0.0, 0.0);
  if (cfg.params.contains("expected_negative")) {
    const double e = param_number(cfg.params, "expected_negative", 0.0);
    rec.check("negative_count", discrete, e, e);
  }
  if (cfg.params.contains("expected_lambda")) {
    const double e = param_number(cfg.params, "expected_lambda", 0.0);
    rec.check("lambda_min_error", std::abs(sd.eigenvalues(0) - e), 0.0, param_number(cfg.params, "lambda_tol", 5e-3));
  }
  out.records.push_back(rec);

  Series s{"spectrum", {"index", "lambda", "is_point"}, {}};
  std::vector<bool> is_point(static_cast<std::size_t>(sd.modes()), false);
  for (auto k : sd.point) is_point[static_cast<std::size_t>(k)] = true;
  for (Eigen::Index k = 0; k < sd.modes(); ++k)
    s.rows.push_back({static_cast<double>(k), sd.eigenvalues(k), is_point[static_cast<std::size_t>(k)] ? 1.0 : 0.0});
  out.series.push_back(std::move(s));
  return out;
}

// --- propagate --------------------------------------------------------------

ExperimentResult run_propagate(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const Setup s = make_setup(cfg);
  const double t = param_number(cfg.params, "t", 0.0);
  const GridFunction u = schrodinger_group(*s.ctx, t, s.X0);
  ReportRecord rec = new_record(cfg);
  // The group acts on the span of the discrete eigenbasis; data outside it
  // (e.g. violating a vertex condition) lose that part at t > 0.
  const GridFunction projected = s.ctx->synthesize(s.ctx->coefficients(s.X0));
  const double l2_in = lp_norm(projected, 2.0), l2_out = lp_norm(u, 2.0);
  rec.set("t", t);
  rec.set("l2_in", lp_norm(s.X0, 2.0));
  rec.set("l2_projected", l2_in);
  rec.set("l2_out", l2_out);
  rec.set("sup_change", lp_norm(u - s.X0, kInf));
  if (t != 0.0)
    rec.check("l2_relative_drift", ratio_or_zero(std::abs(l2_out - l2_in), l2_in), 0.0,
            param_number(cfg.params, "drift_tol", 1e-10));
  out.records.push_back(rec);

  Series f{"field", {"edge", "node", "x", "re_in", "im_in", "re_out", "im_out"}, {}};
  for (std::size_t e = 0; e < s.mesh->edges().size(); ++e) {
    const EdgeGrid& g = s.mesh->edge(e);
    for (std::size_t n = 0; n < g.nodes; ++n) {
      const auto i = static_cast<Eigen::Index>(g.offset + n);
      f.rows.push_back({static_cast<double>(e), static_cast<double>(n), g.x(n), s.X0.values(i).real(),
                        s.X0.values(i).imag(), u.values(i).real(), u.values(i).imag()});
    }
  }
  out.series.push_back(std::move(f));
  return out;
}

// --- decay_fit --------------------------------------------------------------

ExperimentResult run_decay_fit(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const Setup s = make_setup(cfg);
  const double t0 = param_number(cfg.params, "t_min", 0.5), t1 = param_number(cfg.params, "t_max", 5.0);
  const auto points = static_cast<std::size_t>(param_number(cfg.params, "points", 10));
  if (!(t0 > 0.0) || !(t1 > t0) || points < 5) throw ConfigError("decay_fit needs 0 < t_min < t_max and points >= 5");
  const bool continuous_only = cfg.params.value("continuous_only", true);
  const double tail = param_number(cfg.params, "tail", 1e-4);

  std::vector<double> ts, sup;
  Series series{"decay", {"t", "sup_norm", "ratio", "in_window"}, {}};
  std::size_t outside = 0;
  double k_max = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = t0 * std::pow(t1 / t0, static_cast<double>(i) / static_cast<double>(points - 1));
    const DecayRatio d = decay_ratio(*s.ctx, s.X0, t, continuous_only, tail);
    ts.push_back(t);
    sup.push_back(d.sup_norm);
    k_max = d.k_max;
    if (!d.in_window) ++outside;
    series.rows.push_back({t, d.sup_norm, d.ratio, d.in_window ? 1.0 : 0.0});
  }
  const SlopeFit fit = fit_decay_slope(ts, sup);
  ReportRecord rec = new_record(cfg);
  rec.set("slope", fit.slope, fit.stderr_slope);
  rec.set("k_max", k_max);
  rec.set("points_outside_window", static_cast<double>(outside));
  rec.check("decay_slope", fit.slope, param_number(cfg.params, "slope_min", -0.65),
            param_number(cfg.params, "slope_max", -0.35));
  out.records.push_back(rec);
  out.series.push_back(std::move(series));
  return out;
}

// --- strichartz -------------------------------------------------------------

ExperimentResult run_strichartz(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const Setup s = make_setup(cfg);
  const double r = param_number(cfg.params, "r", kInf), p = param_number(cfg.params, "p", 2.0);
  if (!admissible(r, p)) throw ConfigError("strichartz: (r, p) is not admissible");
  const double dt = param_number(cfg.params, "dt", 1e-2);
  const std::vector<double> Ts = param_list(cfg.params, "T_list");
  const double beta = strichartz_beta(r, p);
  Series series{"ratio", {"T", "ratio", "stderr"}, {}};
  std::vector<double> ratios;
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    const Estimate e = strichartz_ratio(*s.ctx, s.X0, r, p, Ts[i], cfg.trials, trial_seed(cfg.seed, 7000 + i), dt);
    ReportRecord rec = new_record(cfg);
    rec.parameters["T"] = Ts[i];
    rec.set("beta", beta);
    rec.set("ratio", e.value, e.stderr_value);
    if (std::isinf(r) && p == 2.0) rec.check("isometry_ratio_error", std::abs(e.value - 1.0), 0.0, 1e-8);
    out.records.push_back(rec);
    series.rows.push_back({Ts[i], e.value, e.stderr_value});
    ratios.push_back(e.value);
  }
  ReportRecord summary = new_record(cfg);
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  summary.set("beta", beta);
  summary.set("ratio_min", lo);
  summary.set("ratio_max", hi);
  summary.check("ratio_spread", hi / lo, 1.0, param_number(cfg.params, "max_spread", 2.0));
  out.records.push_back(summary);
  out.series.push_back(std::move(series));
  return out;
}

// --- nlse_wnd / nlse_random -------------------------------------------------

void add_trajectory_series(ExperimentResult& out, const Trajectory& traj) {
  Series s{"trajectory", {"t", "l2_norm", "form_norm", "linf_norm", "running_rp_norm"}, {}};
  for (std::size_t k = 0; k < traj.size(); ++k)
    s.rows.push_back({traj.times[k], traj.l2[k], traj.form[k], traj.linf[k], traj.running_rp[k]});
  out.series.push_back(std::move(s));
}

struct TrialOutcome {
  double drift = 0.0;
  double observable = 0.0;
  bool stopped = false;
  Trajectory traj;  // kept for trial 0 only
};

ExperimentResult summarize_trials(const ExperimentConfig& cfg, std::vector<TrialOutcome>& trials) {
  ExperimentResult out;
  ReportRecord rec = new_record(cfg);
  rec.parameters["solver"] = solver_parameters(cfg.solver);
  std::vector<double> obs;
  double drift = 0.0;
  std::size_t stopped = 0;
  for (const auto& t : trials) {
    obs.push_back(t.observable);
    drift = std::max(drift, t.drift);
    if (t.stopped) ++stopped;
  }
  const Estimate m = mean_estimate(obs);
  rec.set("observable_mean", m.value, m.stderr_value);
  rec.set("max_l2_relative_drift", drift);
  rec.set("stop_fraction", static_cast<double>(stopped) / static_cast<double>(trials.size()));
  if (stopped == 0) rec.check("l2_relative_drift", drift, 0.0, param_number(cfg.params, "drift_tol", 1e-8));
  out.records.push_back(rec);
  add_trajectory_series(out, trials.front().traj);
  return out;
}

TrialOutcome outcome(const PropagatorContext& ctx, const Trajectory& traj, Observable obs, std::size_t probe,
                     bool keep) {
  TrialOutcome o;
  const double l0 = traj.l2.front();
  for (double v : traj.l2) o.drift = std::max(o.drift, ratio_or_zero(std::abs(v - l0), l0));
  o.observable = observe(ctx, traj.final_state(), obs, probe);
  o.stopped = traj.stopped;
  if (keep) o.traj = traj;
  return o;
}

std::size_t probe_index(const Mesh& mesh, const nlohmann::json& params) {
  if (!params.contains("probe")) return 0;
  const auto& p = params.at("probe");
  const std::size_t e = p.value("edge", std::size_t{0});
  if (e >= mesh.edges().size()) throw ConfigError("params.probe.edge out of range");
  const EdgeGrid& g = mesh.edge(e);
  const auto node = static_cast<std::size_t>(std::llround(p.value("x", 0.0) / g.h));
  return g.offset + std::min(node, g.nodes - 1);
}

// Picard versus splitting on one sampled driver, refined in dt.
void run_oracle(const ExperimentConfig& cfg, const Setup& s, ExperimentResult& out) {
  const nlohmann::json o = cfg.params.at("oracle");
  const auto levels = static_cast<std::size_t>(param_number(o, "levels", 3));
  const double dt0 = param_number(o, "dt0", cfg.solver.dt);
  const double driver_dt = param_number(o, "driver_dt", cfg.solver.T / 16.0);
  const NoisePath coarse = brownian_path(cfg.solver.T, driver_dt, 0.0, trial_seed(cfg.seed, 0));
  PicardOptions po;
  po.tol = param_number(o, "tol", po.tol);
  std::vector<double> errors;
  Series series{"oracle", {"dt", "sup_l2_difference", "picard_iterations"}, {}};
  for (std::size_t l = 0; l < levels; ++l) {
    SolverConfig sc = cfg.solver;
    sc.dt = dt0 / std::pow(2.0, static_cast<double>(l));
    sc.save_every = 1;
    const std::size_t n = step_count(sc.T, sc.dt);
    const Eigen::VectorXd beta = interpolate_driver(coarse, sc.T / static_cast<double>(n), n);
    const Trajectory split = solve_with_driver(*s.ctx, s.X0, sc, beta);
    const PicardResult pic = picard_solve(*s.ctx, s.X0, beta, sc, po);
    double err = 0.0;
    for (std::size_t k = 0; k < split.states.size(); ++k)
      err = std::max(err, lp_norm(split.states[k] - pic.trajectory.states[k], 2.0));
    int iters = 0;
    for (int i : pic.iterations) iters = std::max(iters, i);
    errors.push_back(err);
    series.rows.push_back({sc.dt, err, static_cast<double>(iters)});
  }
  ReportRecord rec = new_record(cfg);
  rec.parameters["solver"] = solver_parameters(cfg.solver);
  for (std::size_t l = 0; l < errors.size(); ++l) rec.set("error_level_" + std::to_string(l), errors[l]);
  const std::vector<double> orders = observed_orders(errors, 2.0);
  const double min_order = orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end());
  rec.set("min_observed_order", min_order);
  rec.check("errors_decreasing_violations", count_non_decreases(errors), 0.0, 0.0);
  rec.check("min_observed_order", min_order, param_number(o, "min_order", 1.0), kInf);
  out.records.push_back(rec);
  out.series.push_back(std::move(series));
}

void run_ito(const ExperimentConfig& cfg, const Setup& s, ExperimentResult& out) {
  const auto modes = static_cast<Eigen::Index>(param_number(cfg.params, "modes", 10));
  if (modes < 1 || modes > s.ctx->eigenvalues().size()) throw ConfigError("params.modes out of range");
  std::vector<double> dts = cfg.params.contains("dt_list") ? param_list(cfg.params, "dt_list")
                                                            : std::vector<double>{1.0 / 50, 1.0 / 100, 1.0 / 200, 1.0 / 400};
  const Eigen::VectorXd lambda = s.ctx->eigenvalues().head(modes);
  const std::vector<Estimate> errs = ito_strong_errors(lambda, cfg.solver.T, dts, cfg.trials, cfg.seed);
  ReportRecord rec = new_record(cfg);
  rec.parameters["solver"] = solver_parameters(cfg.solver);
  Series series{"ito_error", {"dt", "strong_error", "stderr"}, {}};
  std::vector<double> e;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    rec.set("error_dt_" + std::to_string(i), errs[i].value, errs[i].stderr_value);
    series.rows.push_back({dts[i], errs[i].value, errs[i].stderr_value});
    e.push_back(errs[i].value);
  }
  const std::vector<double> orders = observed_orders(e, dts.size() > 1 ? dts[0] / dts[1] : 2.0);
  rec.set("mean_observed_order",
          orders.empty() ? 0.0 : std::accumulate(orders.begin(), orders.end(), 0.0) / static_cast<double>(orders.size()));
  rec.check("errors_decreasing_violations", count_non_decreases(e), 0.0, 0.0);
  out.records.push_back(rec);
  out.series.push_back(std::move(series));
}

ExperimentResult run_nlse_wnd(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  if (cfg.params.contains("oracle")) {
    ExperimentResult out;
    run_oracle(cfg, s, out);
    return out;
  }
  if (cfg.solver.scheme == Scheme::ito_euler) {
    ExperimentResult out;
    run_ito(cfg, s, out);
    return out;
  }
  const Observable obs = observable_from_string(cfg.params.value("observable", std::string("l4")));
  const std::size_t probe = probe_index(*s.mesh, cfg.params);
  auto trials = parallel_map<TrialOutcome>(cfg.trials, [&](std::size_t i) {
    SolverConfig sc = cfg.solver;
    sc.seed = trial_seed(cfg.seed, i);
    if (sc.scheme == Scheme::picard) {
      const std::size_t n = step_count(sc.T, sc.dt);
      const NoisePath b = brownian_path(sc.T, sc.T / static_cast<double>(n), 0.0, sc.seed);
      return outcome(*s.ctx, picard_solve(*s.ctx, s.X0, b.values, sc).trajectory, obs, probe, i == 0);
    }
    return outcome(*s.ctx, solve_wnd(*s.ctx, s.X0, sc), obs, probe, i == 0);
  });
  return summarize_trials(cfg, trials);
}

NoisePath dispersion_path(const nlohmann::json& params, double horizon, std::uint64_t seed) {
  const std::string process = params.value("process", std::string("ou"));
  const double dt = param_number(params, "dt_noise", 1e-2);
  const double gamma = param_number(params, "gamma", 1.0), s = param_number(params, "s", 1.0);
  const std::size_t n = step_count(horizon, dt) + 1;
  const double T = static_cast<double>(n) * dt;
  if (process == "ou") return ou_path(gamma, s, T, dt, seed);
  if (process == "telegraph") return telegraph_path(gamma, s, T, dt, seed);
  if (process == "zero" || process == "constant") {
    NoisePath p;
    p.dt = dt;
    p.values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n + 1), process == "zero" ? 0.0 : param_number(params, "value", 1.0));
    return p;
  }
  throw ConfigError("unknown dispersion process '" + process + "'");
}

ExperimentResult run_nlse_random(const ExperimentConfig& cfg) {
  const Setup s = make_setup(cfg);
  const double eps = param_number(cfg.params, "eps", 0.1);
  if (!(eps > 0.0)) throw ConfigError("params.eps must be positive");
  const Observable obs = observable_from_string(cfg.params.value("observable", std::string("l4")));
  const std::size_t probe = probe_index(*s.mesh, cfg.params);
  auto trials = parallel_map<TrialOutcome>(cfg.trials, [&](std::size_t i) {
    SolverConfig sc = cfg.solver;
    sc.seed = trial_seed(cfg.seed, i);
    const NoisePath m = dispersion_path(cfg.params, sc.T / (eps * eps), sc.seed);
    return outcome(*s.ctx, solve_random_dispersion(*s.ctx, s.X0, sc, eps, m), obs, probe, i == 0);
  });
  return summarize_trials(cfg, trials);
}

// --- invariance -------------------------------------------------------------

ExperimentResult run_invariance(const ExperimentConfig& cfg) {
  ExperimentResult out;
  std::vector<double> eps = param_list(cfg.params, "eps_list");
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const double gamma = param_number(cfg.params, "gamma", 1.0), s = param_number(cfg.params, "s", 1.0);
  const double t = param_number(cfg.params, "t", 1.0);
  const std::string process = cfg.params.value("process", std::string("ou"));
  const double target = process == "zero" ? 0.0 : s * s * t / (gamma * gamma);
  Series series{"variance", {"eps", "variance", "stderr", "variance_naive", "stderr_naive"}, {}};
  std::vector<double> abs_err;
  double last_z = 0.0;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const double e = eps[j];
    struct Sample {
      double beta = 0.0, control = 0.0;
    };
    auto samples = parallel_map<Sample>(cfg.trials, [&](std::size_t i) {
      const NoisePath m = dispersion_path(cfg.params, t / (e * e), stream_seed(cfg.seed, j, i));
      Sample smp;
      smp.beta = scaled_dispersion_integral(m, e, t);
      // beta + (eps/gamma)(m(t/eps^2) - m(0)) equals (eps s/gamma) W(t/eps^2) for OU.
      smp.control = process == "ou" ? smp.beta + e / gamma * (m.at(t / (e * e)) - m.values(0)) : smp.beta;
      return smp;
    });
    std::vector<double> b, c;
    for (const auto& x : samples) {
      b.push_back(x.beta);
      c.push_back(x.control);
    }
    const Estimate naive = variance_estimate(b);
    // Control variate: Var[beta] = Var[C] + (Var[beta] - Var[C]) with Var[C]
    // known; the bracket is estimated from paired samples.
    const double mb = mean_estimate(b).value, mc = mean_estimate(c).value;
    std::vector<double> d;
    for (std::size_t i = 0; i < b.size(); ++i) d.push_back((b[i] - mb) * (b[i] - mb) - (c[i] - mc) * (c[i] - mc));
    const Estimate diff = mean_estimate(d);
    const double nfac = static_cast<double>(b.size()) / static_cast<double>(b.size() - 1);
    Estimate paired{target + nfac * diff.value, nfac * diff.stderr_value};
    if (process != "ou") paired = naive;
    ReportRecord rec = new_record(cfg);
    rec.parameters["eps"] = e;
    rec.set("variance", paired.value, paired.stderr_value);
    rec.set("variance_naive", naive.value, naive.stderr_value);
    rec.set("target", target);
    out.records.push_back(rec);
    series.rows.push_back({e, paired.value, paired.stderr_value, naive.value, naive.stderr_value});
    abs_err.push_back(std::abs(paired.value - target));
    last_z = ratio_or_zero(std::abs(paired.value - target), paired.stderr_value);
  }
  ReportRecord summary = new_record(cfg);
  summary.set("target", target);
  summary.set("final_abs_error", abs_err.back());
  summary.check("final_error_in_stderr", last_z, 0.0, param_number(cfg.params, "z_max", 3.0));
  if (target != 0.0 && eps.size() > 1)
    summary.check("error_shrinking_violations", count_non_decreases(abs_err), 0.0, 0.0);
  out.records.push_back(summary);
  out.series.push_back(std::move(series));
  return out;
}

// --- converge_eps -----------------------------------------------------------

ExperimentResult run_converge_eps(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const Setup s = make_setup(cfg);
  std::vector<double> eps = param_list(cfg.params, "eps_list");
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const double gamma = param_number(cfg.params, "gamma", 1.0), sd = param_number(cfg.params, "s", 1.0);
  const double dt_u = param_number(cfg.params, "dt_noise", 1e-2);
  const bool coupled = cfg.params.value("coupled", true);
  const Observable obs = observable_from_string(cfg.params.value("observable", std::string("l4")));
  const std::size_t probe = probe_index(*s.mesh, cfg.params);
  const std::size_t n = step_count(cfg.solver.T, cfg.solver.dt);
  const double dt = cfg.solver.T / static_cast<double>(n);
  // Fine grid for the limiting Brownian motion: step delta divides dt and is
  // at most eps_min^2 dt_u, so every OU grid is a subgrid.
  const double eps_min = eps.back();
  const auto sub = static_cast<std::size_t>(std::ceil(dt / (eps_min * eps_min * dt_u) - 1e-9));
  const double delta = dt / static_cast<double>(sub);
  std::vector<std::size_t> factor;
  for (double e : eps) factor.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(e * e * dt_u / delta))));
  const std::size_t fine = n * sub + *std::max_element(factor.begin(), factor.end()) + 1;

  struct Row {
    std::vector<double> obs;
    std::vector<int> stopped;
    double reference = 0.0;
  };
  auto rows = parallel_map<Row>(cfg.trials, [&](std::size_t i) {
    std::mt19937_64 rng(trial_seed(cfg.seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Row row;
    Eigen::VectorXd B(static_cast<Eigen::Index>(fine + 1));
    B(0) = 0.0;
    const double scale = sd / gamma * std::sqrt(delta);
    for (std::size_t k = 1; k <= fine; ++k)
      B(static_cast<Eigen::Index>(k)) = B(static_cast<Eigen::Index>(k - 1)) + scale * normal(rng);
    const double z0 = normal(rng);
    SolverConfig sc = cfg.solver;
    sc.seed = trial_seed(cfg.seed, i);
    Eigen::VectorXd ref(static_cast<Eigen::Index>(n + 1));
    for (std::size_t k = 0; k <= n; ++k) ref(static_cast<Eigen::Index>(k)) = B(static_cast<Eigen::Index>(k * sub));
    row.reference = observe(*s.ctx, solve_with_driver(*s.ctx, s.X0, sc, ref).final_state(), obs, probe);
    for (std::size_t j = 0; j < eps.size(); ++j) {
      const double e = eps[j];
      NoisePath m;
      if (coupled) {
        const std::size_t f = factor[j];
        const double du = static_cast<double>(f) * delta / (e * e);
        const std::size_t steps = (fine - 1) / f;
        Eigen::VectorXd xi(static_cast<Eigen::Index>(steps));
        // W(u) = gamma B(eps^2 u) / (s eps) is a standard Brownian motion.
        for (std::size_t k = 0; k < steps; ++k)
          xi(static_cast<Eigen::Index>(k)) = gamma / (sd * e) *
                                             (B(static_cast<Eigen::Index>((k + 1) * f)) - B(static_cast<Eigen::Index>(k * f))) /
                                             std::sqrt(du);
        m = ou_path_from_normals(gamma, sd, du, sd / std::sqrt(2.0 * gamma) * z0, xi);
      } else {
        m = dispersion_path(cfg.params, sc.T / (e * e), stream_seed(cfg.seed, j + 1, i));
      }
      const Trajectory traj = solve_random_dispersion(*s.ctx, s.X0, sc, e, m);
      row.obs.push_back(observe(*s.ctx, traj.final_state(), obs, probe));
      row.stopped.push_back(traj.stopped ? 1 : 0);
    }
    return row;
  });

  std::vector<double> reference;
  for (const auto& r : rows) reference.push_back(r.reference);
  Series series{"convergence", {"eps", "ks_distance", "stop_fraction", "stop_fraction_stderr"}, {}};
  std::vector<double> ks, stop, stop_se;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    std::vector<double> o, st;
    for (const auto& r : rows) {
      o.push_back(r.obs[j]);
      st.push_back(r.stopped[j]);
    }
    const Estimate sf = mean_estimate(st);
    const Estimate mo = mean_estimate(o);
    ReportRecord rec = new_record(cfg);
    rec.parameters["eps"] = eps[j];
    rec.parameters["solver"] = solver_parameters(cfg.solver);
    rec.set("ks_distance", ks_distance(o, reference));
    rec.set("stop_fraction", sf.value, sf.stderr_value);
    rec.set("observable_mean", mo.value, mo.stderr_value);
    if (cfg.solver.truncation.kind != TruncationKind::none) rec.check("stop_fraction_truncated", sf.value, 0.0, 0.0);
    out.records.push_back(rec);
    ks.push_back(rec.values["ks_distance"]);
    stop.push_back(sf.value);
    stop_se.push_back(sf.stderr_value);
    series.rows.push_back({eps[j], ks.back(), sf.value, sf.stderr_value});
  }
  const Estimate ref_mean = mean_estimate(reference);
  ReportRecord summary = new_record(cfg);
  summary.set("reference_observable_mean", ref_mean.value, ref_mean.stderr_value);
  summary.check("ks_decreasing_violations", count_non_decreases(ks), 0.0, 0.0);
  int stop_violations = 0;
  for (std::size_t j = 0; j + 1 < stop.size(); ++j)
    if (stop[j + 1] > stop[j] + 2.0 * std::hypot(stop_se[j], stop_se[j + 1])) ++stop_violations;
  summary.check("stop_fraction_increase_violations", stop_violations, 0.0, 0.0);
  out.records.push_back(summary);
  out.series.push_back(std::move(series));
  return out;
}

// --- driver_continuity ------------------------------------------------------

ExperimentResult run_driver_continuity(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const Setup s = make_setup(cfg);
  std::vector<double> widths = param_list(cfg.params, "widths");
  std::sort(widths.begin(), widths.end(), std::greater<>());
  SolverConfig sc = cfg.solver;
  sc.save_every = 1;
  const std::size_t n = step_count(sc.T, sc.dt);
  const double dt = sc.T / static_cast<double>(n);
  const NoisePath b = brownian_path(sc.T, dt, 0.0, trial_seed(cfg.seed, 0));
  const PicardResult ref = picard_solve(*s.ctx, s.X0, b.values, sc);
  Series series{"continuity", {"width", "driver_sup_distance", "sup_form_distance"}, {}};
  std::vector<double> dist;
  for (double w : widths) {
    const Eigen::VectorXd nw = mollify_driver(b.values, dt, w);
    const PicardResult pr = picard_solve(*s.ctx, s.X0, nw, sc);
    double d = 0.0;
    for (std::size_t k = 0; k < ref.trajectory.states.size(); ++k)
      d = std::max(d, form_norm(s.ctx->spectral(), s.ctx->op(), pr.trajectory.states[k] - ref.trajectory.states[k]));
    dist.push_back(d);
    ReportRecord rec = new_record(cfg);
    rec.parameters["width"] = w;
    rec.parameters["solver"] = solver_parameters(cfg.solver);
    rec.set("driver_sup_distance", (nw - b.values).cwiseAbs().maxCoeff());
    rec.set("sup_form_distance", d);
    out.records.push_back(rec);
    series.rows.push_back({w, rec.values["driver_sup_distance"], d});
  }
  ReportRecord summary = new_record(cfg);
  summary.check("distance_decreasing_violations", count_non_decreases(dist), 0.0, 0.0);
  out.records.push_back(summary);
  out.series.push_back(std::move(series));
  return out;
}

// --- star_formula -----------------------------------------------------------

ExperimentResult run_star_formula(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const std::vector<double> hs = param_list(cfg.params, "h_list");
  const double t = param_number(cfg.params, "t", 0.5);
  const double damping = param_number(cfg.params, "damping", 1e-4);
  nlohmann::json initial = cfg.initial;
  if (!cfg.initial.contains("type") || cfg.initial.is_null()) initial = {{"type", "star_flat"}};
  Series series{"error", {"h", "relative_l2_error"}, {}};
  std::vector<double> errors;
  for (double h : hs) {
    MeshOptions mo = cfg.mesh;
    mo.h = h;
    ExperimentConfig local = cfg;
    local.initial = initial;
    const Setup s = make_setup(local, mo);
    const GridFunction lhs = edge_derivative(schrodinger_group(*s.ctx, t, s.X0));
    const GridFunction rhs = star_derivative_rhs(*s.ctx, t, s.X0, damping);
    const double err = lp_norm(lhs - rhs, 2.0) / lp_norm(lhs, 2.0);
    errors.push_back(err);
    ReportRecord rec = new_record(cfg);
    rec.parameters["h"] = h;
    rec.set("relative_l2_error", err);
    out.records.push_back(rec);
    series.rows.push_back({h, err});
  }
  ReportRecord summary = new_record(cfg);
  summary.set("final_error", errors.back());
  summary.check("error_decreasing_violations", count_non_decreases(errors), 0.0, 0.0);
  summary.check("final_relative_error", errors.back(), 0.0, param_number(cfg.params, "max_error", 5e-2));
  out.records.push_back(summary);
  out.series.push_back(std::move(series));
  return out;
}

}  // namespace

bool ExperimentResult::pass() const {
  for (const auto& r : records)
    if (!r.pass()) return false;
  return true;
}

std::size_t worker_count(std::size_t tasks) {
  std::size_t w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QGWND_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    w = v >= 1 ? static_cast<std::size_t>(v) : 1;
  }
  return std::max<std::size_t>(1, std::min(w, tasks));
}

Observable observable_from_string(const std::string& name) {
  if (name == "l4") return Observable::l4;
  if (name == "form") return Observable::form;
  if (name == "probe") return Observable::probe;
  throw ConfigError("unknown observable '" + name + "'");
}

double observe(const PropagatorContext& ctx, const GridFunction& u, Observable kind, std::size_t probe_index) {
  switch (kind) {
    case Observable::l4: return lp_norm(u, 4.0);
    case Observable::form: return form_norm(ctx.spectral(), ctx.op(), u);
    case Observable::probe: return std::abs(u.values(static_cast<Eigen::Index>(probe_index)));
  }
  return 0.0;
}

double strichartz_beta(double r, double p) {
  const double two_over_r = std::isinf(r) ? 0.0 : 2.0 / r;
  return two_over_r - 0.5 * (0.5 - 1.0 / p);
}

Estimate strichartz_ratio(const PropagatorContext& ctx, const GridFunction& X0, double r, double p, double T,
                          std::size_t trials, std::uint64_t seed, double dt) {
  if (!admissible(r, p)) throw ConfigError("strichartz_ratio: (r, p) is not admissible");
  if (trials < 1) throw ConfigError("strichartz_ratio needs at least one trial");
  const double l2 = lp_norm(X0, 2.0);
  if (l2 == 0.0) throw ConfigError("strichartz_ratio of the zero datum");
  const std::size_t n = step_count(T, dt);
  const double h = T / static_cast<double>(n);
  const Eigen::VectorXcd a0 = ctx.coefficients(X0);
  const Eigen::VectorXd& lambda = ctx.eigenvalues();
  const Eigen::VectorXd& w = ctx.mesh_ptr()->weights();
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k) times[k] = static_cast<double>(k) * h;
  // Per trial: the L^r_t L^p_x norm raised to r (or the norm itself for r = inf).
  const std::vector<double> norms = parallel_map<double>(trials, [&](std::size_t i) {
    const NoisePath b = brownian_path(T, h, 0.0, trial_seed(seed, i));
    Eigen::MatrixXcd A(a0.size(), static_cast<Eigen::Index>(n + 1));
    for (std::size_t k = 0; k <= n; ++k)
      for (Eigen::Index j = 0; j < a0.size(); ++j)
        A(j, static_cast<Eigen::Index>(k)) = a0(j) * std::polar(1.0, -lambda(j) * b.values(static_cast<Eigen::Index>(k)));
    const Eigen::MatrixXcd U = ctx.spectral().synthesize(A);
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      const auto col = U.col(static_cast<Eigen::Index>(k));
      if (p == 2.0) {
        g[k] = std::sqrt((w.array() * col.cwiseAbs2().array()).sum());
      } else {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < col.size(); ++j) sum += w(j) * std::pow(std::abs(col(j)), p);
        g[k] = std::pow(sum, 1.0 / p);
      }
    }
    const double norm = time_norm(times, g, r);
    return std::isinf(r) ? norm : std::pow(norm, r);
  });
  const double denom = std::pow(T, strichartz_beta(r, p) / 2.0) * l2;
  Estimate e;
  if (std::isinf(r)) {
    e.value = *std::max_element(norms.begin(), norms.end()) / denom;
    return e;
  }
  const Estimate m = mean_estimate(norms);
  const double root = std::pow(m.value, 1.0 / r);
  e.value = root / denom;
  // Delta method for x -> x^{1/r}.
  e.stderr_value = root / (r * m.value) * m.stderr_value / denom;
  return e;
}

std::vector<Estimate> ito_strong_errors(const Eigen::VectorXd& lambda, double T, const std::vector<double>& dts,
                                        std::size_t trials, std::uint64_t seed) {
  if (dts.empty()) throw ConfigError("ito_strong_errors needs at least one dt");
  const double finest = *std::min_element(dts.begin(), dts.end());
  const std::size_t nf = step_count(T, finest);
  const double hf = T / static_cast<double>(nf);
  std::vector<std::size_t> ratio;
  for (double dt : dts) {
    const double q = dt / hf;
    const auto qi = static_cast<std::size_t>(std::llround(q));
    if (qi < 1 || std::abs(q - static_cast<double>(qi)) > 1e-9 * q || nf % qi != 0)
      throw ConfigError("ito_strong_errors: every dt must be an integer multiple of the finest");
    ratio.push_back(qi);
  }
  const auto per_trial = parallel_map<std::vector<double>>(trials, [&](std::size_t i) {
    const NoisePath b = brownian_path(T, hf, 0.0, trial_seed(seed, i));
    const double bT = b.values(static_cast<Eigen::Index>(nf));
    std::vector<double> err;
    for (std::size_t l = 0; l < dts.size(); ++l) {
      const std::size_t q = ratio[l];
      const double dt = hf * static_cast<double>(q);
      Eigen::VectorXcd c = Eigen::VectorXcd::Ones(lambda.size());
      for (std::size_t k = 0; k < nf; k += q) {
        const double db = b.values(static_cast<Eigen::Index>(k + q)) - b.values(static_cast<Eigen::Index>(k));
        c = ito_euler_coefficients(lambda, c, dt, db);
      }
      double e = 0.0;
      for (Eigen::Index j = 0; j < lambda.size(); ++j) e = std::max(e, std::abs(c(j) - std::polar(1.0, -lambda(j) * bT)));
      err.push_back(e);
    }
    return err;
  });
  std::vector<Estimate> out;
  for (std::size_t l = 0; l < dts.size(); ++l) {
    std::vector<double> x;
    for (const auto& v : per_trial) x.push_back(v[l]);
    out.push_back(mean_estimate(x));
  }
  return out;
}

Eigen::VectorXd interpolate_driver(const NoisePath& coarse, double dt, std::size_t n) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) out(static_cast<Eigen::Index>(k)) = coarse.at(std::min(static_cast<double>(k) * dt, coarse.horizon()));
  return out;
}

Eigen::VectorXd mollify_driver(const Eigen::VectorXd& beta, double dt, double width) {
  if (!(width >= 0.0)) throw ConfigError("mollification width must be nonnegative");
  const auto half = static_cast<Eigen::Index>(std::llround(0.5 * width / dt));
  if (half == 0) return beta;
  const Eigen::Index n = beta.size();
  Eigen::VectorXd prefix(n + 1);
  prefix(0) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) prefix(k + 1) = prefix(k) + beta(k);
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index a = std::max<Eigen::Index>(0, k - half), b = std::min<Eigen::Index>(n - 1, k + half);
    out(k) = (prefix(b + 1) - prefix(a)) / static_cast<double>(b - a + 1);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  switch (cfg.kind) {
    case ExperimentKind::spectrum: result = run_spectrum(cfg); break;
    case ExperimentKind::propagate: result = run_propagate(cfg); break;
    case ExperimentKind::decay_fit: result = run_decay_fit(cfg); break;
    case ExperimentKind::strichartz: result = run_strichartz(cfg); break;
    case ExperimentKind::nlse_wnd: result = run_nlse_wnd(cfg); break;
    case ExperimentKind::nlse_random: result = run_nlse_random(cfg); break;
    case ExperimentKind::invariance: result = run_invariance(cfg); break;
    case ExperimentKind::converge_eps: result = run_converge_eps(cfg); break;
    case ExperimentKind::driver_continuity: result = run_driver_continuity(cfg); break;
    case ExperimentKind::star_formula: result = run_star_formula(cfg); break;
  }
  for (const auto& r : result.records) validate_record(r);
  if (!cfg.output.empty()) write_run(cfg.output, to_string(cfg.kind), result.records, result.series);
  return result;
}

}  // namespace qgwnd
