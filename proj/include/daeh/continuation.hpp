#pragma once

// T-periodic orbits by shooting on R(x0, lambda) = P_T(x0) - x0, branch
// continuation from trivial pairs and the multiplicity scan for small lambda.

#include <optional>
#include <string>
#include <vector>

#include "daeh/degree.hpp"
#include "daeh/flow.hpp"

namespace daeh::continuation {

struct PeriodicOrbit {
  double lambda = 0.0;
  Vector x0;
  Vector y0;
  flow::Trajectory orbit;  // sampled over [0, T]; empty when not requested
  double shoot_residual = 0.0;
  Matrix floquet;  // monodromy d P_T / d x0 at x0
  /// Bound on |x0 - exact fixed point|: ||(M - I)^{-1}|| * residual for
  /// Newton solutions, the bracket width for sign-change solutions.
  double uncertainty = 0.0;
  std::string verification;  // "newton" or "bracket"
};

struct ShootOptions {
  double tol = 1e-9;
  int max_iterations = 30;
  flow::PoincareOptions poincare;
  bool with_orbit = true;
};

/// Damped Newton on R.  Errors: NoConvergence, SingularShootingJacobian,
/// integration errors.
PeriodicOrbit find_periodic(const DaeProblem& prob, double lambda, std::span<const double> x_guess,
                            const ShootOptions& opts = {}, std::optional<Vector> q_guess = std::nullopt);

/// R(x0, lambda) without the monodromy.
Vector shooting_residual(const DaeProblem& prob, double lambda, std::span<const double> x0,
                         const ShootOptions& opts = {}, std::optional<Vector> q_guess = std::nullopt);

enum class Termination { ReachedLambdaMax, LeftDomain, NormEscape, ReturnedToTrivial, FoldLimit, StepFailure };

std::string to_string(Termination t);
/// Terminations that settle where a branch goes (not StepFailure or FoldLimit).
bool conclusive(Termination t);

struct Branch {
  std::vector<PeriodicOrbit> points;  // orbit trajectories are not stored
  degree::ZeroRecord origin;
  Termination termination = Termination::StepFailure;
  std::optional<std::size_t> returned_to;  // index into the zero list
  std::string detail;
};

struct BranchOptions {
  double ds0 = 0.01;
  double ds_min = 1e-6;
  double ds_max = 0.2;
  int max_steps = 2000;
  int max_corrector_iterations = 8;
  double escape_bound = 1e6;
  ShootOptions shoot;
  std::vector<degree::ZeroRecord> zeros;  // for the return-to-trivial test
};

/// Pseudo-arclength continuation in (lambda, x0) from a non-resonant zero.
/// Errors: ResonantOrigin.
Branch continue_branch(const DaeProblem& prob, const degree::ZeroRecord& origin, double lambda_max,
                       const BranchOptions& opts = {});

/// CSV with header `step,lambda,x0_1..x0_k,shoot_residual,termination`.
std::string branch_csv(const Branch& branch, std::size_t k);

struct MultiplicityOptions {
  int grid_per_dim = 8;  // multistart shooting grid on the x-part of the box
  int bracket_points = 64;  // k = 1 sign-change scan
  int max_backoffs = 6;
  double distinct_tol = 1e-4;
  double uncertainty_cap = 1e-4;  // Newton solutions above this are not counted
  BranchOptions branch;
  degree::DegreeOptions degree;
};

struct MultiplicityReport {
  double lambda = 0.0;  // value at which the scan succeeded (after back-off)
  int backoffs = 0;
  int degree_total = 0;
  int index_sum = 0;
  std::size_t required = 0;  // r + 1
  std::vector<PeriodicOrbit> orbits;  // pairwise distinct
  Matrix distances;  // max over [0, T] of |z_i(t) - z_j(t)|_inf
  std::size_t unverified_candidates = 0;
  std::vector<std::string> warnings;
};

/// Errors: ResonantOrigin, DegreeMatch, InsufficientOrbits.
MultiplicityReport multiplicity_scan(const DaeProblem& prob, double lambda_small,
                                     const std::vector<degree::ZeroRecord>& zeros, const Box& box,
                                     const MultiplicityOptions& opts = {});

/// max over the common samples of |a(t) - b(t)|_inf.
double orbit_distance(const flow::Trajectory& a, const flow::Trajectory& b);

struct EjectionVerdict {
  degree::ZeroRecord zero;
  bool ejecting = false;
  Branch evidence;
};

EjectionVerdict ejection_verdict(const DaeProblem& prob, const degree::ZeroRecord& zero, double lambda_probe,
                                 const BranchOptions& opts = {});

}  // namespace daeh::continuation
