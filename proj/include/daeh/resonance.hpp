#pragma once

// Reduced linearization Phi = d1f - d2f [d2g]^{-1} d1g at a zero of F and the
// T-resonance test  2 n pi i / T in sigma(Phi).

#include <complex>
#include <vector>

#include "daeh/model.hpp"

namespace daeh::resonance {

using linalg::Complex;

/// Errors: SingularBlock.
Matrix phi_matrix(const DaeProblem& prob, const PointKS& zero);

/// Finite-difference Jacobian of the reduced field x -> f(x, gamma(x)),
/// with gamma from solve_constraint.
Matrix reduced_jacobian_fd(const DaeProblem& prob, const PointKS& zero, double step = 1e-6);

std::vector<Complex> eigenvalues(const Matrix& m);

struct ResonanceOptions {
  double res_tol = 1e-7;
  double marginal_tol = 1e-4;
};

struct ResonanceReport {
  PointKS zero;
  Matrix phi;
  std::vector<Complex> eigenvalues;
  bool resonant = false;
  bool marginal = false;  // not resonant, but within marginal_tol
  std::vector<long> matched_n;
  double min_distance = 0.0;  // min over eigenvalues and n of |mu - 2 n pi i / T|
  double det_jac = 0.0;
  double det_d2g = 0.0;
  double det_phi = 0.0;
  double det_identity_residual = 0.0;  // |det dF - det d2g det Phi| / (1 + |det dF|)
};

ResonanceReport is_T_resonant(const DaeProblem& prob, const PointKS& zero, double period,
                              const ResonanceOptions& opts = {});

/// Resonance verdict for a bare matrix (used by tests and the report).
ResonanceReport classify(const Matrix& phi, double period, const ResonanceOptions& opts = {});

struct Prop41Report {
  Matrix monodromy;  // of xi' = a(t) Phi xi over [0, T]
  Matrix exp_t_phi;
  double residual = 0.0;  // ||monodromy - exp(T Phi)|| / (1 + ||exp(T Phi)||)
  bool monodromy_resonant = false;  // eigenvalue 1 within 1e-6
  bool exp_resonant = false;
  bool verdicts_agree = false;
};

/// Compares the monodromy of xi' = a(t) Phi xi with exp(T Phi).  Needs a
/// drift of mean 1 (InvalidProblem otherwise).
Prop41Report check_prop_4_1(const DaeProblem& prob, const PointKS& zero, double period);
Prop41Report check_prop_4_1(const DaeProblem& prob, const Matrix& phi, double period);

}  // namespace daeh::resonance
