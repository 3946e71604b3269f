#pragma once

// Scalar quadrature and an explicit Runge-Kutta driver shared by the flow
// and resonance modules.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace daeh::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals = 0;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.
QuadratureResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                               double abs_tol = 1e-12, int max_intervals = 4000);

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double h0 = 0.0;  // 0: pick automatically
  double h_max = 0.0;  // 0: no cap
  long max_steps = 2'000'000;
};

struct OdeHooks {
  /// Called after every accepted step; may modify the state (projection).
  std::function<void(double t, std::vector<double>& y)> after_step;
  /// Called at t0 and at every requested sample time.
  std::function<void(double t, std::span<const double> y)> on_sample;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  double last_h = 0.0;
};

/// Dormand-Prince 5(4) with PI-free standard step control.  Steps are
/// shortened to land exactly on every time in `sample_times` (sorted,
/// inside (t0, t1]).  Throws Error(StiffFailure) on step-size underflow.
OdeStats dormand_prince(const Rhs& rhs, double t0, double t1, std::vector<double>& y,
                        const OdeOptions& opts, std::span<const double> sample_times = {},
                        const OdeHooks& hooks = {});

}  // namespace daeh::numerics
