#include "daeh/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "daeh/error.hpp"
#include "daeh/parallel.hpp"
#include "daeh/resonance.hpp"

namespace daeh::continuation {

using linalg::norm_inf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool integration_failure(ErrorKind k) {
  switch (k) {
    case ErrorKind::LeftDomain:
    case ErrorKind::BlowUp:
    case ErrorKind::StiffFailure:
    case ErrorKind::DomainError:
    case ErrorKind::NoConvergence:
    case ErrorKind::SingularBlock:
      return true;
    default:
      return false;
  }
}

Matrix minus_identity(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) -= 1.0;
  return m;
}

// ||A||_inf ||A^{-1}||_inf, infinite when A is exactly singular.
double condition_inf(const Matrix& a, Matrix* inv_out = nullptr) {
  const auto lu = linalg::lu(a);
  if (lu.exactly_singular()) return kInf;
  const Matrix inv = linalg::inverse(a);
  if (inv_out) *inv_out = inv;
  return linalg::norm_inf(a) * linalg::norm_inf(inv);
}

flow::Trajectory sample_orbit(const DaeProblem& prob, double lambda, const Vector& x0, const Vector& y0,
                              const ShootOptions& opts) {
  const auto start = manifold::ManifoldPoint::make(prob, PointKS{x0, y0});
  flow::IntegrateOptions io = opts.poincare.integrate;
  io.sample_count = 65;
  return flow::integrate(prob, lambda, start, 0.0, prob.period(), io);
}

Vector residual_of(const flow::MonodromyReport& rep) {
  Vector r = rep.p_t;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rep.x0[i];
  return r;
}

}  // namespace

Vector shooting_residual(const DaeProblem& prob, double lambda, std::span<const double> x0, const ShootOptions& opts,
                         std::optional<Vector> q_guess) {
  flow::PoincareOptions po = opts.poincare;
  po.with_monodromy = false;
  return residual_of(flow::poincare_T(prob, lambda, x0, po, std::move(q_guess)));
}

PeriodicOrbit find_periodic(const DaeProblem& prob, double lambda, std::span<const double> x_guess,
                            const ShootOptions& opts, std::optional<Vector> q_guess) {
  const std::size_t k = prob.k();
  Vector x(x_guess.begin(), x_guess.end());
  Vector q = q_guess ? *q_guess : flow::default_q_guess(prob);
  flow::PoincareOptions po = opts.poincare;
  po.with_monodromy = true;
  std::vector<double> history;

  for (int it = 0; it <= opts.max_iterations; ++it) {
    const auto rep = flow::poincare_T(prob, lambda, x, po, q);
    q = rep.y0;
    const Vector r = residual_of(rep);
    const double res = norm_inf(r);
    history.push_back(res);
    const Matrix j = minus_identity(rep.monodromy);
    Matrix inv;
    const double cond = condition_inf(j, &inv);

    if (res <= opts.tol) {
      PeriodicOrbit orb;
      orb.lambda = lambda;
      orb.x0 = x;
      orb.y0 = rep.y0;
      orb.shoot_residual = res;
      orb.floquet = rep.monodromy;
      orb.uncertainty = std::isfinite(cond) ? linalg::norm_inf(inv) * res : kInf;
      orb.verification = "newton";
      if (opts.with_orbit) orb.orbit = sample_orbit(prob, lambda, orb.x0, orb.y0, opts);
      return orb;
    }
    if (it == opts.max_iterations) break;
    // The second bound catches M = I, where the condition number is uninformative.
    if (!(cond < 1e13) || !(linalg::norm_inf(inv) < 1e8)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "I - M is numerically singular (condition estimate %.3e, |(M - I)^-1| %.3e)",
                    cond, std::isfinite(cond) ? linalg::norm_inf(inv) : kInf);
      fail(ErrorKind::SingularShootingJacobian, buf);
    }
    const Vector step = inv * r;
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 12 && !accepted; ++half) {
      Vector trial = x;
      for (std::size_t i = 0; i < k; ++i) trial[i] -= alpha * step[i];
      try {
        const double tr = norm_inf(shooting_residual(prob, lambda, trial, opts, q));
        if (tr < res) {
          x = trial;
          accepted = true;
        }
      } catch (const Error& e) {
        if (!integration_failure(e.kind())) throw;
      }
      if (!accepted) alpha *= 0.5;
    }
    if (!accepted) break;
  }
  std::ostringstream os;
  os << "shooting Newton did not converge; residual history:";
  for (double h : history) os << ' ' << h;
  fail(ErrorKind::NoConvergence, os.str());
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ReachedLambdaMax: return "ReachedLambdaMax";
    case Termination::LeftDomain: return "LeftDomain";
    case Termination::NormEscape: return "NormEscape";
    case Termination::ReturnedToTrivial: return "ReturnedToTrivial";
    case Termination::FoldLimit: return "FoldLimit";
    case Termination::StepFailure: return "StepFailure";
  }
  return "?";
}

bool conclusive(Termination t) { return t != Termination::FoldLimit && t != Termination::StepFailure; }

namespace {

struct Corrected {
  double lambda = 0.0;
  Vector x;
  Vector y0;
  double residual = 0.0;
  Matrix monodromy;
  Vector dr_dlambda;
  int iterations = 0;
};

// d R / d lambda by a one-sided difference.
Vector lambda_derivative(const DaeProblem& prob, double lambda, const Vector& x, const Vector& r0,
                         const ShootOptions& opts, const Vector& q) {
  const double h = 1e-6 * (1.0 + std::abs(lambda));
  const Vector r1 = shooting_residual(prob, lambda + h, x, opts, q);
  Vector d(r0.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (r1[i] - r0[i]) / h;
  return d;
}

// Newton on { R(x, lambda) = 0, tau . (u - u_prev) = ds } from the predictor.
std::optional<Corrected> correct(const DaeProblem& prob, const Vector& u_prev, const Vector& tau, double ds,
                                 const Vector& q_guess, const BranchOptions& opts) {
  const std::size_t k = prob.k();
  Vector u(k + 1);
  for (std::size_t i = 0; i <= k; ++i) u[i] = u_prev[i] + ds * tau[i];
  Vector q = q_guess;
  flow::PoincareOptions po = opts.shoot.poincare;
  po.with_monodromy = true;
  for (int it = 0; it < opts.max_corrector_iterations; ++it) {
    const double lambda = u[0];
    const Vector x(u.begin() + 1, u.end());
    const auto rep = flow::poincare_T(prob, lambda, x, po, q);
    q = rep.y0;
    const Vector r = residual_of(rep);
    const Vector dl = lambda_derivative(prob, lambda, x, r, opts.shoot, q);
    const double res = norm_inf(r);
    if (res <= opts.shoot.tol) {
      return Corrected{lambda, x, rep.y0, res, rep.monodromy, dl, it};
    }
    Matrix j(k + 1, k + 1);
    Vector g(k + 1);
    for (std::size_t i = 0; i < k; ++i) {
      j(i, 0) = dl[i];
      for (std::size_t c = 0; c < k; ++c) j(i, c + 1) = rep.monodromy(i, c) - (i == c ? 1.0 : 0.0);
      g[i] = r[i];
    }
    double arc = -ds;
    for (std::size_t c = 0; c <= k; ++c) {
      j(k, c) = tau[c];
      arc += tau[c] * (u[c] - u_prev[c]);
    }
    g[k] = arc;
    if (linalg::lu(j).exactly_singular()) return std::nullopt;
    const Vector step = linalg::solve(j, g);
    for (std::size_t c = 0; c <= k; ++c) u[c] -= step[c];
    if (!std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); })) return std::nullopt;
  }
  return std::nullopt;
}

Vector normalized(Vector v) {
  const double n = linalg::norm2(v);
  for (double& c : v) c /= n;
  return v;
}

PeriodicOrbit as_orbit(const Corrected& c) {
  PeriodicOrbit o;
  o.lambda = c.lambda;
  o.x0 = c.x;
  o.y0 = c.y0;
  o.shoot_residual = c.residual;
  o.floquet = c.monodromy;
  o.verification = "newton";
  Matrix inv;
  const double cond = condition_inf(minus_identity(c.monodromy), &inv);
  o.uncertainty = std::isfinite(cond) ? linalg::norm_inf(inv) * c.residual : kInf;
  return o;
}

std::optional<std::size_t> near_zero(const std::vector<degree::ZeroRecord>& zeros, const Vector& x, double tol) {
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) d = std::max(d, std::abs(zeros[i].z.p[c] - x[c]));
    if (d <= tol) return i;
  }
  return std::nullopt;
}

}  // namespace

Branch continue_branch(const DaeProblem& prob, const degree::ZeroRecord& origin, double lambda_max,
                       const BranchOptions& opts) {
  const std::size_t k = prob.k();
  const auto res = resonance::is_T_resonant(prob, origin.z, prob.period());
  if (res.resonant) {
    fail(ErrorKind::ResonantOrigin, "the zero is T-resonant; the branch predictor is undefined there");
  }
  Branch br;
  br.origin = origin;

  ShootOptions shoot = opts.shoot;
  shoot.with_orbit = false;
  PeriodicOrbit p0 = find_periodic(prob, 0.0, origin.z.p, shoot, origin.z.q);
  br.points.push_back(p0);

  // initial tangent from (M - I) dx/dlambda = -dR/dlambda
  const Vector r0 = shooting_residual(prob, 0.0, p0.x0, shoot, p0.y0);
  const Vector dl = lambda_derivative(prob, 0.0, p0.x0, r0, shoot, p0.y0);
  Vector dx = linalg::solve(minus_identity(p0.floquet), dl);
  Vector tau(k + 1);
  tau[0] = 1.0;
  for (std::size_t i = 0; i < k; ++i) tau[i + 1] = -dx[i];
  tau = normalized(tau);

  Vector u(k + 1);
  u[0] = 0.0;
  for (std::size_t i = 0; i < k; ++i) u[i + 1] = p0.x0[i];
  Vector q = p0.y0;
  double ds = opts.ds0;
  int reversals = 0;
  int last_dir = 1;
  std::optional<ErrorKind> last_error;

  for (int step = 0; step < opts.max_steps; ++step) {
    std::optional<Corrected> c;
    try {
      c = correct(prob, u, tau, ds, q, opts);
    } catch (const Error& e) {
      if (!integration_failure(e.kind()) && e.kind() != ErrorKind::SingularShootingJacobian) throw;
      last_error = e.kind();
      br.detail = e.what();
    }
    if (!c) {
      ds *= 0.5;
      if (ds < opts.ds_min) {
        br.termination = last_error == ErrorKind::LeftDomain ? Termination::LeftDomain
                         : last_error == ErrorKind::BlowUp   ? Termination::NormEscape
                                                             : Termination::StepFailure;
        if (br.detail.empty()) br.detail = "corrector failed at the minimum step";
        return br;
      }
      continue;
    }
    last_error.reset();
    br.detail.clear();

    if (c->lambda >= lambda_max) {
      // land exactly on lambda_max
      const double s = (lambda_max - u[0]) / (c->lambda - u[0]);
      Vector xg(k);
      for (std::size_t i = 0; i < k; ++i) xg[i] = u[i + 1] + s * (c->x[i] - u[i + 1]);
      try {
        PeriodicOrbit last = find_periodic(prob, lambda_max, xg, shoot, c->y0);
        br.points.push_back(std::move(last));
        br.termination = Termination::ReachedLambdaMax;
        return br;
      } catch (const Error& e) {
        if (!integration_failure(e.kind()) && e.kind() != ErrorKind::SingularShootingJacobian) throw;
        ds *= 0.5;
        if (ds < opts.ds_min) {
          br.termination = Termination::StepFailure;
          br.detail = e.what();
          return br;
        }
        continue;
      }
    }

    PeriodicOrbit pt = as_orbit(*c);
    br.points.push_back(pt);

    if (c->lambda < 1e-6) {
      const auto hit = near_zero(opts.zeros, c->x, 1e-4);
      const bool same = hit && opts.zeros[*hit].z.p == origin.z.p;
      if (hit && !same) {
        br.termination = Termination::ReturnedToTrivial;
        br.returned_to = hit;
        return br;
      }
      if (c->lambda < 0.0) {
        br.termination = hit ? Termination::ReturnedToTrivial : Termination::StepFailure;
        br.returned_to = hit;
        if (!hit) br.detail = "branch crossed lambda = 0 away from the trivial pairs";
        return br;
      }
    }
    if (norm_inf(c->x) > opts.escape_bound) {
      br.termination = Termination::NormEscape;
      return br;
    }
    {
      Vector z = c->x;
      z.insert(z.end(), c->y0.begin(), c->y0.end());
      if (!prob.box().contains(z)) {
        br.termination = Termination::LeftDomain;
        return br;
      }
    }

    const int dir = c->lambda >= u[0] ? 1 : -1;
    reversals = dir != last_dir ? reversals + 1 : 0;
    last_dir = dir;
    if (reversals >= 10) {
      br.termination = Termination::FoldLimit;
      return br;
    }

    Vector u_new(k + 1);
    u_new[0] = c->lambda;
    for (std::size_t i = 0; i < k; ++i) u_new[i + 1] = c->x[i];
    Vector sec(k + 1);
    for (std::size_t i = 0; i <= k; ++i) sec[i] = u_new[i] - u[i];
    tau = normalized(sec);
    u = u_new;
    q = c->y0;
    if (c->iterations <= 2) ds = std::min(2.0 * ds, opts.ds_max);
    else if (c->iterations >= 5) ds *= 0.5;
  }
  br.termination = Termination::StepFailure;
  br.detail = "step budget exhausted";
  return br;
}

std::string branch_csv(const Branch& branch, std::size_t k) {
  std::ostringstream os;
  os << "step,lambda";
  for (std::size_t i = 0; i < k; ++i) os << ",x0_" << (i + 1);
  os << ",shoot_residual,termination\n";
  char buf[40];
  for (std::size_t s = 0; s < branch.points.size(); ++s) {
    const auto& p = branch.points[s];
    os << s;
    std::snprintf(buf, sizeof buf, ",%.12e", p.lambda);
    os << buf;
    for (double v : p.x0) {
      std::snprintf(buf, sizeof buf, ",%.12e", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.12e,", p.shoot_residual);
    os << buf;
    if (s + 1 == branch.points.size()) os << to_string(branch.termination);
    os << '\n';
  }
  return os.str();
}

double orbit_distance(const flow::Trajectory& a, const flow::Trajectory& b) {
  if (a.samples.size() != b.samples.size()) fail(ErrorKind::InvalidProblem, "orbits sampled on different grids");
  double d = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& za = a.samples[i].z;
    const auto& zb = b.samples[i].z;
    for (std::size_t c = 0; c < za.size(); ++c) d = std::max(d, std::abs(za[c] - zb[c]));
  }
  return d;
}

namespace {

// Sign-change scan of the scalar residual for k = 1.  Both ends of every
// bracket have |R| above the shooting tolerance, far above the integration
// error, so the sign change certifies a fixed point inside.
std::vector<PeriodicOrbit> bracket_orbits(const DaeProblem& prob, double lambda, const Box& box, int points,
                                          const ShootOptions& shoot) {
  const auto& bx = box.bounds[0];
  std::vector<double> xs(points);
  std::vector<double> rs(points, std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < points; ++j) xs[j] = bx.lo + (bx.hi - bx.lo) * (j + 0.5) / points;
  parallel_for(static_cast<std::size_t>(points), [&](std::size_t j) {
    try {
      rs[j] = shooting_residual(prob, lambda, std::span<const double>(&xs[j], 1), shoot)[0];
    } catch (const Error& e) {
      if (!integration_failure(e.kind())) throw;
    }
  });
  std::vector<PeriodicOrbit> out;
  for (int j = 0; j + 1 < points; ++j) {
    double a = xs[j], b = xs[j + 1], ra = rs[j], rb = rs[j + 1];
    if (!std::isfinite(ra) || !std::isfinite(rb)) continue;
    if (std::abs(ra) <= shoot.tol || std::abs(rb) <= shoot.tol) continue;
    if ((ra > 0.0) == (rb > 0.0)) continue;
    try {
      double mid = 0.5 * (a + b);
      double rm = 0.0;
      for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (a + b);
        rm = shooting_residual(prob, lambda, std::span<const double>(&mid, 1), shoot)[0];
        if (std::abs(rm) <= shoot.tol) break;
        if ((rm > 0.0) == (ra > 0.0)) {
          a = mid;
          ra = rm;
        } else {
          b = mid;
          rb = rm;
        }
      }
      if (!(std::abs(rm) <= shoot.tol)) continue;
      flow::PoincareOptions po = shoot.poincare;
      po.with_monodromy = true;
      const auto rep = flow::poincare_T(prob, lambda, std::span<const double>(&mid, 1), po);
      PeriodicOrbit o;
      o.lambda = lambda;
      o.x0 = {mid};
      o.y0 = rep.y0;
      o.shoot_residual = std::abs(rm);
      o.floquet = rep.monodromy;
      o.uncertainty = b - a;
      o.verification = "bracket";
      o.orbit = sample_orbit(prob, lambda, o.x0, o.y0, shoot);
      out.push_back(std::move(o));
    } catch (const Error& e) {
      if (!integration_failure(e.kind())) throw;
    }
  }
  return out;
}

}  // namespace

MultiplicityReport multiplicity_scan(const DaeProblem& prob, double lambda_small,
                                     const std::vector<degree::ZeroRecord>& zeros, const Box& box_in,
                                     const MultiplicityOptions& opts) {
  const std::size_t k = prob.k();
  const Box box = degree::bounded_box(prob, box_in);
  for (const auto& z : zeros) {
    if (resonance::is_T_resonant(prob, z.z, prob.period()).resonant) {
      fail(ErrorKind::ResonantOrigin, "listed zeros must be non-T-resonant");
    }
  }
  MultiplicityReport rep;
  const auto deg = degree::degree(prob, box, opts.degree);
  if (!deg.total_degree) fail(ErrorKind::InvalidProblem, "degree over the box is unknown");
  rep.degree_total = *deg.total_degree;
  for (const auto& z : zeros) rep.index_sum += degree::index_of(prob, z);
  if (rep.degree_total == rep.index_sum) {
    fail(ErrorKind::DegreeMatch, "deg(F, box) = " + std::to_string(rep.degree_total) +
                                     " equals the index sum of the listed zeros; the multiplicity bound does not apply");
  }
  rep.required = zeros.size() + 1;

  BranchOptions bopts = opts.branch;
  if (bopts.zeros.empty()) bopts.zeros = deg.zeros;
  ShootOptions shoot = bopts.shoot;
  shoot.with_orbit = true;

  Box xbox;
  xbox.bounds.assign(box.bounds.begin(), box.bounds.begin() + static_cast<std::ptrdiff_t>(k));

  double lambda = lambda_small;
  for (int attempt = 0; attempt <= opts.max_backoffs; ++attempt, lambda *= 0.5) {
    std::vector<PeriodicOrbit> candidates;
    std::vector<std::string> notes;
    // (i) branches from the listed zeros
    for (const auto& z : zeros) {
      const Branch b = continue_branch(prob, z, lambda, bopts);
      if (b.termination != Termination::ReachedLambdaMax) {
        notes.push_back("branch from a listed zero ended with " + to_string(b.termination));
        continue;
      }
      PeriodicOrbit o = b.points.back();
      o.orbit = sample_orbit(prob, lambda, o.x0, o.y0, shoot);
      candidates.push_back(std::move(o));
    }
    // (ii) multistart shooting on the x-grid
    std::vector<Vector> starts;
    {
      const int m = opts.grid_per_dim;
      std::vector<int> idx(k, 0);
      for (;;) {
        Vector p(k);
        for (std::size_t d = 0; d < k; ++d) {
          const auto& b = xbox.bounds[d];
          p[d] = b.lo + (b.hi - b.lo) * (idx[d] + 0.5) / m;
        }
        starts.push_back(p);
        std::size_t d = 0;
        while (d < k && ++idx[d] == m) idx[d++] = 0;
        if (d == k) break;
      }
    }
    std::vector<std::optional<PeriodicOrbit>> shot(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) {
      try {
        shot[i] = find_periodic(prob, lambda, starts[i], shoot);
      } catch (const Error& e) {
        if (!integration_failure(e.kind()) && e.kind() != ErrorKind::SingularShootingJacobian) throw;
      }
    });
    for (auto& s : shot) {
      if (s) candidates.push_back(std::move(*s));
    }
    // (iii) certified sign changes in one dimension
    if (k == 1) {
      auto br = bracket_orbits(prob, lambda, xbox, opts.bracket_points, shoot);
      for (auto& o : br) candidates.push_back(std::move(o));
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.uncertainty < b.uncertainty; });
    std::vector<PeriodicOrbit> accepted;
    std::size_t unverified = 0;
    for (auto& c : candidates) {
      bool dup = false;
      for (const auto& a : accepted) {
        if (orbit_distance(a.orbit, c.orbit) <= std::max(opts.distinct_tol, a.uncertainty + c.uncertainty)) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
      if (c.verification == "newton" && !(c.uncertainty <= opts.uncertainty_cap)) {
        ++unverified;
        continue;
      }
      accepted.push_back(std::move(c));
    }
    if (accepted.size() >= rep.required || attempt == opts.max_backoffs) {
      rep.lambda = lambda;
      rep.backoffs = attempt;
      rep.orbits = std::move(accepted);
      rep.unverified_candidates = unverified;
      rep.warnings = std::move(notes);
      if (rep.orbits.size() >= rep.required) break;
      fail(ErrorKind::InsufficientOrbits, "found " + std::to_string(rep.orbits.size()) + " distinct orbits, need " +
                                              std::to_string(rep.required) + " (lambda backed off to " +
                                              std::to_string(lambda) + ")");
    }
  }
  std::sort(rep.orbits.begin(), rep.orbits.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.x0 < b.x0; });
  const std::size_t n = rep.orbits.size();
  rep.distances = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      rep.distances(i, j) = rep.distances(j, i) = orbit_distance(rep.orbits[i].orbit, rep.orbits[j].orbit);
    }
  }
  return rep;
}

EjectionVerdict ejection_verdict(const DaeProblem& prob, const degree::ZeroRecord& zero, double lambda_probe,
                                 const BranchOptions& opts) {
  EjectionVerdict v;
  v.zero = zero;
  v.evidence = continue_branch(prob, zero, lambda_probe, opts);
  const auto& pts = v.evidence.points;
  v.ejecting = v.evidence.termination == Termination::ReachedLambdaMax && !pts.empty() &&
               pts.back().lambda >= lambda_probe && pts.back().shoot_residual <= 1e-9;
  return v;
}

}  // namespace daeh::continuation
