#pragma once

// The constraint manifold M = g^{-1}(0) and the tangent lifts
//   Psi(p,q)      = ( f,      -[d2g]^{-1} d1g f      )
//   Upsilon(t,p,q) = ( h(t,.), -[d2g]^{-1} d1g h(t,.) )

#include <span>

#include "daeh/model.hpp"

namespace daeh::manifold {

inline constexpr double kConstraintTol = 1e-10;
/// |det| of the row-scaled d2g below this counts as singular.
inline constexpr double kSingularDet = 1e-12;

struct ManifoldPoint {
  PointKS z;
  double g_residual = 0.0;  // infinity norm of g(z)

  /// Checks the residual against `tol`; throws Error(InvalidProblem).
  static ManifoldPoint make(const DaeProblem& prob, PointKS z, double tol = kConstraintTol);
};

struct TangentVector {
  Vector u;  // x-component, length k
  Vector v;  // y-component, length s

  Vector joined() const;
};

struct ConstraintOptions {
  double tol = 1e-12;
  int max_iterations = 50;
};

/// Newton on q -> g(p, q) with p fixed.  Errors: NoConvergence,
/// SingularBlock, LeftDomain.
Vector solve_constraint(const DaeProblem& prob, std::span<const double> p, std::span<const double> q_guess,
                        const ConstraintOptions& opts = {});

/// (p, q) with q = solve_constraint(p, q_guess).
ManifoldPoint project(const DaeProblem& prob, std::span<const double> p, std::span<const double> q_guess,
                      const ConstraintOptions& opts = {});

/// Lift of an x-velocity w to T_zM: (w, -[d2g]^{-1} d1g w).  Works at any
/// z where d2g is invertible (the formula extends off M).
TangentVector lift(const DaeProblem& prob, std::span<const double> z, std::span<const double> w);

TangentVector psi(const DaeProblem& prob, const ManifoldPoint& z);
TangentVector psi_at(const DaeProblem& prob, std::span<const double> z);
TangentVector upsilon(const DaeProblem& prob, double t, const ManifoldPoint& z);
TangentVector upsilon_at(const DaeProblem& prob, double t, std::span<const double> z);

/// ||d1g u + d2g v||_inf at z.
double tangency_residual(const DaeProblem& prob, std::span<const double> z, const TangentVector& w);

/// Throws SingularBlock if d2g is numerically singular.
void require_invertible(const Matrix& d2g, std::span<const double> z);

}  // namespace daeh::manifold
