#include "daeh/resonance.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

#include "daeh/error.hpp"
#include "daeh/manifold.hpp"
#include "daeh/numerics.hpp"

namespace daeh::resonance {

Matrix phi_matrix(const DaeProblem& prob, const PointKS& zero) {
  const Vector z = zero.joined();
  const auto b = prob.blocks(z);
  manifold::require_invertible(b.d2g, z);
  return b.d1f - b.d2f * linalg::solve(b.d2g, b.d1g);
}

Matrix reduced_jacobian_fd(const DaeProblem& prob, const PointKS& zero, double step) {
  const std::size_t k = prob.k();
  auto reduced = [&](const Vector& p) {
    const Vector q = manifold::solve_constraint(prob, p, zero.q);
    PointKS z{p, q};
    return prob.eval_f(z.joined());
  };
  Matrix out(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    const double h = step * (1.0 + std::abs(zero.p[j]));
    Vector pp = zero.p;
    Vector pm = zero.p;
    pp[j] += h;
    pm[j] -= h;
    const Vector fp = reduced(pp);
    const Vector fm = reduced(pm);
    for (std::size_t i = 0; i < k; ++i) out(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return out;
}

std::vector<Complex> eigenvalues(const Matrix& m) { return linalg::eigenvalues(m).values; }

ResonanceReport classify(const Matrix& phi, double period, const ResonanceOptions& opts) {
  ResonanceReport rep;
  rep.phi = phi;
  rep.eigenvalues = resonance::eigenvalues(phi);
  const double omega = 2.0 * std::numbers::pi / period;
  const long n_max = static_cast<long>(std::ceil(linalg::norm_fro(phi) * period / (2.0 * std::numbers::pi))) + 1;
  rep.min_distance = std::numeric_limits<double>::infinity();
  for (const Complex& mu : rep.eigenvalues) {
    for (long n = -n_max; n <= n_max; ++n) {
      const double d = std::abs(mu - Complex(0.0, omega * static_cast<double>(n)));
      rep.min_distance = std::min(rep.min_distance, d);
      if (d <= opts.res_tol) {
        rep.resonant = true;
        bool seen = false;
        for (long m : rep.matched_n) seen = seen || m == n;
        if (!seen) rep.matched_n.push_back(n);
      }
    }
  }
  std::sort(rep.matched_n.begin(), rep.matched_n.end());
  rep.marginal = !rep.resonant && rep.min_distance <= opts.marginal_tol;
  rep.det_phi = linalg::determinant(phi);
  return rep;
}

ResonanceReport is_T_resonant(const DaeProblem& prob, const PointKS& zero, double period,
                              const ResonanceOptions& opts) {
  ResonanceReport rep = classify(phi_matrix(prob, zero), period, opts);
  rep.zero = zero;
  const Vector z = zero.joined();
  rep.det_jac = linalg::determinant(prob.jac_F(z));
  rep.det_d2g = linalg::determinant(prob.d2g(z));
  rep.det_identity_residual = std::abs(rep.det_jac - rep.det_d2g * rep.det_phi) / (1.0 + std::abs(rep.det_jac));
  return rep;
}

Prop41Report check_prop_4_1(const DaeProblem& prob, const Matrix& phi, double period) {
  if (std::abs(prob.a_mean() - 1.0) > 1e-9) {
    fail(ErrorKind::InvalidProblem, "the monodromy comparison needs a drift of mean 1 (mean is " +
                                        std::to_string(prob.a_mean()) + ")");
  }
  const std::size_t k = phi.rows();
  std::vector<double> x(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) x[i * k + i] = 1.0;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const double at = prob.eval_a(t);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += phi(i, l) * y[l * k + j];
        dy[i * k + j] = at * acc;
      }
    }
  };
  numerics::OdeOptions ode;
  ode.rtol = 1e-12;
  ode.atol = 1e-13;
  ode.h_max = period / 16.0;
  numerics::dormand_prince(rhs, 0.0, period, x, ode);

  Prop41Report rep;
  rep.monodromy = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) rep.monodromy(i, j) = x[i * k + j];
  }
  rep.exp_t_phi = linalg::expm(phi * period);
  rep.residual = linalg::norm_fro(rep.monodromy - rep.exp_t_phi) / (1.0 + linalg::norm_fro(rep.exp_t_phi));
  auto has_unit = [](const Matrix& m) {
    for (const Complex& mu : linalg::eigenvalues(m).values) {
      if (std::abs(mu - Complex(1.0, 0.0)) <= 1e-6) return true;
    }
    return false;
  };
  rep.monodromy_resonant = has_unit(rep.monodromy);
  rep.exp_resonant = has_unit(rep.exp_t_phi);
  rep.verdicts_agree = rep.monodromy_resonant == rep.exp_resonant;
  return rep;
}

Prop41Report check_prop_4_1(const DaeProblem& prob, const PointKS& zero, double period) {
  return check_prop_4_1(prob, phi_matrix(prob, zero), period);
}

}  // namespace daeh::resonance
