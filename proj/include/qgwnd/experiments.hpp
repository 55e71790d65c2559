#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "qgwnd/config.hpp"
#include "qgwnd/picard.hpp"
#include "qgwnd/propagation.hpp"
#include "qgwnd/report.hpp"
#include "qgwnd/statistics.hpp"

namespace qgwnd {

struct ExperimentResult {
  std::vector<ReportRecord> records;
  std::vector<Series> series;

  bool pass() const;
};

/// Dispatches on cfg.kind. Deterministic given cfg.seed; when cfg.output is
/// set, writes <output>/<kind>.json and one CSV per series.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Workers for n tasks: QGWND_THREADS when set (at least 1), otherwise the
/// hardware concurrency, never more than n.
std::size_t worker_count(std::size_t tasks);

/// fn(i) for i = 0..n-1 on worker threads; results are returned in index
/// order, so any reduction over them is independent of the worker count.
template <class R>
std::vector<R> parallel_map(std::size_t n, const std::function<R(std::size_t)>& fn, std::size_t workers = 0) {
  std::vector<R> out(n);
  if (workers == 0) workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Scalar observables of a state for convergence-in-law tests.
enum class Observable { l4, form, probe };
Observable observable_from_string(const std::string& name);
double observe(const PropagatorContext& ctx, const GridFunction& u, Observable kind, std::size_t probe_index = 0);

/// Scaling exponent 2/r - (1/2)(1/2 - 1/p) of the Strichartz bound.
double strichartz_beta(double r, double p);

/// (E |U(beta(.)) X0|^r_{L^r_{[0,T]} L^p_x})^{1/r} / (T^{beta/2} |X0|_2) over
/// `trials` Brownian drivers sampled on a grid of step dt. For r = inf the
/// expectation is replaced by the maximum over trials.
Estimate strichartz_ratio(const PropagatorContext& ctx, const GridFunction& X0, double r, double p, double T,
                          std::size_t trials, std::uint64_t seed, double dt = 1e-2);

/// Strong error E|c_k(T) - c_k e^{-i lambda_k beta(T)}| of the Ito-Euler
/// recursion on the given eigenvalues with c_k = 1, one entry per dt. The
/// Brownian path of each trial is drawn on the finest grid and summed for the
/// coarser ones.
std::vector<Estimate> ito_strong_errors(const Eigen::VectorXd& lambda, double T, const std::vector<double>& dts,
                                        std::size_t trials, std::uint64_t seed);

/// Driver values on the grid k dt, k = 0..n, by linear interpolation of a
/// path sampled on a coarser grid.
Eigen::VectorXd interpolate_driver(const NoisePath& coarse, double dt, std::size_t n);

/// Centered moving average of the driver over a window of the given width
/// (shrunk near the ends); width 0 returns the input.
Eigen::VectorXd mollify_driver(const Eigen::VectorXd& beta, double dt, double width);

}  // namespace qgwnd
