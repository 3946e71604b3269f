#pragma once

// The perturbed separated-variable DAE
//
//   x' = a(t) f(x, y) + lambda h(t, x, y),   g(x, y) = 0,
//
// with x in R^k, y in R^s, a and h T-periodic in t and a of nonzero mean.
// Expressions refer to x1..xk, y1..ys and t (plain `x` / `y` are accepted
// when k = 1 / s = 1).

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "daeh/expr.hpp"
#include "daeh/linalg.hpp"

namespace daeh {

using linalg::Matrix;
using linalg::Vector;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lo && v < hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// Product of open intervals.
struct Box {
  std::vector<Interval> bounds;

  std::size_t dim() const { return bounds.size(); }
  bool contains(std::span<const double> z) const;
  bool bounded() const;
  /// Replaces infinite bounds by +-half_width.
  Box capped(double half_width) const;
  bool empty() const;
  Vector center() const;
};

/// A point (p, q) in R^k x R^s.
struct PointKS {
  Vector p;
  Vector q;

  Vector joined() const;
  static PointKS split(std::span<const double> z, std::size_t k);
};

/// Textual description of a problem before validation.
struct ProblemSpec {
  std::string name;
  std::size_t k = 0;
  std::size_t s = 0;
  std::vector<expr::Expr> f;
  std::vector<expr::Expr> g;
  std::vector<expr::Expr> h;
  expr::Expr a;
  double period = 0.0;
  Box domain;
  double cap_half_width = 10.0;
};

/// Partial derivative blocks of f and g at one point.
struct JacobianBlocks {
  Matrix d1f;  // k x k
  Matrix d2f;  // k x s
  Matrix d1g;  // s x k
  Matrix d2g;  // s x s
};

class DaeProblem {
 public:
  /// Validates periodicity of a and h, computes the mean of a and
  /// compiles every expression.  Throws Error(InvalidProblem).
  static DaeProblem create(ProblemSpec spec);

  const std::string& name() const { return spec_.name; }
  std::size_t k() const { return spec_.k; }
  std::size_t s() const { return spec_.s; }
  std::size_t n() const { return spec_.k + spec_.s; }
  double period() const { return spec_.period; }
  double a_mean() const { return a_mean_; }
  const ProblemSpec& spec() const { return spec_; }
  /// The declared domain U (bounds may be infinite).
  const Box& domain() const { return spec_.domain; }
  /// U intersected with the numeric cap; used for searches and escape checks.
  const Box& box() const { return box_; }
  double cap_half_width() const { return spec_.cap_half_width; }

  /// Same problem with a replaced by the constant 1 (used for the
  /// time-reparametrization identities).
  DaeProblem with_unit_drift() const;

  double eval_a(double t) const;
  Vector eval_f(std::span<const double> z) const;
  Vector eval_g(std::span<const double> z) const;
  Vector eval_h(double t, std::span<const double> z) const;
  Vector eval_F(std::span<const double> z) const;
  Vector eval_F(const PointKS& z) const { return eval_F(z.joined()); }

  JacobianBlocks blocks(std::span<const double> z) const;
  /// d2g only (the s x s block), cheaper than blocks().
  Matrix d2g(std::span<const double> z) const;
  Matrix jac_F(std::span<const double> z) const;
  Matrix jac_F(const PointKS& z) const { return jac_F(z.joined()); }

  /// f(z), h(t, z) and dg(z) (s x (k+s)) in one pass; the integrator hot path.
  void eval_field_parts(double t, std::span<const double> z, std::span<double> f, std::span<double> h,
                        Matrix& dg) const;

 private:
  DaeProblem() = default;
  void compile();

  ProblemSpec spec_;
  Box box_;
  double a_mean_ = 0.0;
  std::vector<expr::Program> f_, g_, h_;
  expr::Program a_;
  std::vector<std::size_t> state_slots_;  // 0..n-1
};

/// Problem x' = (a/b) x + lambda h(t, x, y), g(b(t) x, y) = 0 whose
/// constraint moves with t.
struct MovingConstraintProblem {
  std::string name;
  std::size_t k = 1;
  std::size_t s = 1;
  expr::Expr a;
  expr::Expr b;
  std::vector<expr::Expr> g;  // evaluated at (b(t) x, y)
  std::vector<expr::Expr> h;
  double period = 0.0;
  Box domain;  // in the transformed coordinates (b x, y)
  double cap_half_width = 10.0;
};

/// Change of variables X = b(t) x turning the moving constraint into a
/// fixed one: X' = ((b' + a)/b) X + lambda b h(t, X/b, y), g(X, y) = 0.
DaeProblem transform_theta_b(const MovingConstraintProblem& raw);

/// Maps a transformed state back: x = X / b(t), y unchanged.
PointKS pullback_theta_b(const MovingConstraintProblem& raw, double t, const PointKS& transformed);

/// Built-in problems: "example-3-7", "reactor", "example-4-6".
DaeProblem builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// The untransformed form of the "example-3-7" built-in.
MovingConstraintProblem example_3_7_raw();

/// Reactor rate constants used by the "reactor" built-in.
struct ReactorConstants {
  double k1 = 0.5, k2 = 2.0, k3 = 0.5, k4 = 1.0;
  double c0 = 2.0, temp0 = 1.0, temp_c = 1.0;
};

/// Parses the key=value problem format (docs/problem-format.md).
ProblemSpec parse_problem_text(const std::string& text, const std::string& name = "file");
DaeProblem load_problem_file(const std::string& path);

/// Variable name of state coordinate i (x1..xk then y1..ys).
std::string state_variable_name(std::size_t i, std::size_t k);

}  // namespace daeh
