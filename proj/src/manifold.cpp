#include "daeh/manifold.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "daeh/error.hpp"

namespace daeh::manifold {

using linalg::norm_inf;

namespace {

std::string describe(std::span<const double> z) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
  os << ")";
  return os.str();
}

}  // namespace

void require_invertible(const Matrix& d2g, std::span<const double> z) {
  const double det = linalg::scaled_determinant(d2g);
  if (!(std::abs(det) >= kSingularDet)) {
    fail(ErrorKind::SingularBlock, "d2g is singular at " + describe(z) + " (scaled det " + std::to_string(det) + ")");
  }
}

ManifoldPoint ManifoldPoint::make(const DaeProblem& prob, PointKS z, double tol) {
  const double r = norm_inf(prob.eval_g(z.joined()));
  if (!(r <= tol)) {
    fail(ErrorKind::InvalidProblem, "point " + describe(z.joined()) + " is not on M (|g| = " + std::to_string(r) + ")");
  }
  return {std::move(z), r};
}

Vector TangentVector::joined() const {
  Vector out = u;
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

Vector solve_constraint(const DaeProblem& prob, std::span<const double> p, std::span<const double> q_guess,
                        const ConstraintOptions& opts) {
  const std::size_t k = prob.k();
  const std::size_t s = prob.s();
  Vector z(p.begin(), p.end());
  z.insert(z.end(), q_guess.begin(), q_guess.end());
  const Box& box = prob.domain();
  if (!box.contains(z)) fail(ErrorKind::LeftDomain, "constraint solve started outside the domain at " + describe(z));

  Vector g = prob.eval_g(z);
  double res = norm_inf(g);
  std::vector<double> history{res};
  for (int it = 0; it < opts.max_iterations && res > opts.tol; ++it) {
    Matrix j = prob.d2g(z);
    require_invertible(j, z);
    Vector step = linalg::solve(j, g);
    double alpha = 1.0;
    Vector trial(z.size());
    double trial_res = std::numeric_limits<double>::infinity();
    Vector trial_g;
    for (int half = 0; half < 30; ++half) {
      trial = z;
      for (std::size_t i = 0; i < s; ++i) trial[k + i] -= alpha * step[i];
      if (box.contains(trial)) {
        try {
          trial_g = prob.eval_g(trial);
          trial_res = norm_inf(trial_g);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DomainError) throw;
          trial_res = std::numeric_limits<double>::infinity();
        }
        if (trial_res < res || trial_res <= opts.tol) break;
      }
      alpha *= 0.5;
    }
    if (!box.contains(trial)) {
      fail(ErrorKind::LeftDomain, "constraint Newton left the domain near " + describe(z));
    }
    const double step_norm = alpha * norm_inf(step);
    const bool progress = trial_res < res;
    if (progress) {
      z = trial;
      g = trial_g;
      res = trial_res;
      history.push_back(res);
    }
    // stagnation at rounding level
    if (!progress || step_norm <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + norm_inf(z))) {
      if (res <= 1e-10) break;
      if (!progress) break;
    }
  }
  // below 1e-10 a stalled Newton is rounding-limited, not divergent
  if (res > std::max(opts.tol, 1e-10)) {
    std::ostringstream os;
    os << "constraint solve did not converge at p = " << describe(p) << "; residual history:";
    for (double h : history) os << ' ' << h;
    fail(ErrorKind::NoConvergence, os.str());
  }
  return Vector(z.begin() + static_cast<std::ptrdiff_t>(k), z.end());
}

ManifoldPoint project(const DaeProblem& prob, std::span<const double> p, std::span<const double> q_guess,
                      const ConstraintOptions& opts) {
  Vector q = solve_constraint(prob, p, q_guess, opts);
  PointKS z{Vector(p.begin(), p.end()), q};
  const double r = norm_inf(prob.eval_g(z.joined()));
  return {std::move(z), r};
}

TangentVector lift(const DaeProblem& prob, std::span<const double> z, std::span<const double> w) {
  const auto b = prob.blocks(z);
  require_invertible(b.d2g, z);
  Vector rhs = b.d1g * w;
  Vector v = linalg::solve(b.d2g, rhs);
  for (double& c : v) c = -c;
  return {Vector(w.begin(), w.end()), std::move(v)};
}

TangentVector psi_at(const DaeProblem& prob, std::span<const double> z) {
  Vector f = prob.eval_f(z);
  return lift(prob, z, f);
}

TangentVector psi(const DaeProblem& prob, const ManifoldPoint& z) { return psi_at(prob, z.z.joined()); }

TangentVector upsilon_at(const DaeProblem& prob, double t, std::span<const double> z) {
  Vector h = prob.eval_h(t, z);
  return lift(prob, z, h);
}

TangentVector upsilon(const DaeProblem& prob, double t, const ManifoldPoint& z) {
  return upsilon_at(prob, t, z.z.joined());
}

double tangency_residual(const DaeProblem& prob, std::span<const double> z, const TangentVector& w) {
  const auto b = prob.blocks(z);
  Vector r = b.d1g * w.u;
  Vector r2 = b.d2g * w.v;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += r2[i];
  return norm_inf(r);
}

}  // namespace daeh::manifold
