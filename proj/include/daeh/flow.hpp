#pragma once

// Integration of  zeta' = a(t) Psi(zeta) + lambda Upsilon(t, zeta)  on M,
// the time reparametrization phi_a, and the Poincare T-translation map.

#include <optional>
#include <string>
#include <vector>

#include "daeh/manifold.hpp"

namespace daeh::flow {

struct Sample {
  double t = 0.0;
  Vector z;  // (x, y)
  double g_residual = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  double lambda = 0.0;
  double max_g_residual = 0.0;  // over every accepted step
  long steps = 0;
};

struct IntegrateOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  int sample_count = 65;  // equispaced samples over [t0, t1], endpoints included
  double escape_bound = 1e6;
  double h_max = 0.0;
};

/// Errors: BlowUp, LeftDomain, StiffFailure, SingularBlock.
Trajectory integrate(const DaeProblem& prob, double lambda, const manifold::ManifoldPoint& z0, double t0, double t1,
                     const IntegrateOptions& opts = {});

/// phi_a(t) = integral of a over [0, t].
double phi_a(const DaeProblem& prob, double t);

/// Default starting guess for y: 0 when admissible, else the box center.
Vector default_q_guess(const DaeProblem& prob);

struct MonodromyReport {
  Vector x0;
  Vector y0;
  Vector p_t;       // x-component of the flow at t = T
  Vector y_t;
  Matrix monodromy;  // d p_t / d x0, k x k (empty when not requested)
  double max_g_residual = 0.0;
};

struct PoincareOptions {
  IntegrateOptions integrate;
  double fd_scale = 1e-6;  // step fd_scale * (1 + |x0_i|)
  bool with_monodromy = true;
  std::optional<double> horizon;  // defaults to the period
};

/// The x-component Poincare map at time T and its finite-difference derivative.
MonodromyReport poincare_T(const DaeProblem& prob, double lambda, std::span<const double> x0,
                           const PoincareOptions& opts = {}, std::optional<Vector> q_guess = std::nullopt);

/// CSV with header `t,x1..xk,y1..ys,g_residual`.
std::string trajectory_csv(const Trajectory& traj, std::size_t k, std::size_t s);

}  // namespace daeh::flow
