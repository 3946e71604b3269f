#include "daeh/flow.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "daeh/error.hpp"
#include "daeh/numerics.hpp"
#include "daeh/parallel.hpp"

namespace daeh::flow {

using linalg::norm_inf;

namespace {

std::string at_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "t = %.6g", t);
  return buf;
}

// Newton correction of y with x fixed.  At least one full step is always
// taken so the projected state depends smoothly on the unprojected one.
double reproject(const DaeProblem& prob, std::vector<double>& z, double t) {
  const std::size_t k = prob.k();
  const std::size_t s = prob.s();
  Vector g = prob.eval_g(z);
  double res = norm_inf(g);
  for (int it = 0; it < 6; ++it) {
    const Matrix j = prob.d2g(z);
    manifold::require_invertible(j, z);
    const Vector step = linalg::solve(j, g);
    for (std::size_t i = 0; i < s; ++i) z[k + i] -= step[i];
    g = prob.eval_g(z);
    res = norm_inf(g);
    if (res <= 1e-14 * (1.0 + norm_inf(z))) break;
  }
  if (res > 1e-10) {
    Vector p(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k));
    Vector q(z.begin() + static_cast<std::ptrdiff_t>(k), z.end());
    try {
      q = manifold::solve_constraint(prob, p, q);
    } catch (const Error& e) {
      fail(e.kind(), "re-projection failed at " + at_time(t) + ": " + e.what());
    }
    for (std::size_t i = 0; i < s; ++i) z[k + i] = q[i];
    res = norm_inf(prob.eval_g(z));
  }
  return res;
}

}  // namespace

Trajectory integrate(const DaeProblem& prob, double lambda, const manifold::ManifoldPoint& z0, double t0, double t1,
                     const IntegrateOptions& opts) {
  const std::size_t k = prob.k();
  const std::size_t s = prob.s();
  const std::size_t n = prob.n();
  const Box& box = prob.domain();

  std::vector<double> z = z0.z.joined();
  if (z.size() != n) fail(ErrorKind::InvalidProblem, "initial state has the wrong dimension");
  if (!box.contains(z)) fail(ErrorKind::LeftDomain, "initial state lies outside the domain");

  Trajectory traj;
  traj.lambda = lambda;
  traj.max_g_residual = z0.g_residual;

  auto rhs = [&](double t, std::span<const double> zz, std::span<double> dz) {
    thread_local Vector f, h, w, rhs_v;
    thread_local Matrix dg;
    f.resize(k);
    h.resize(k);
    w.resize(k);
    try {
      prob.eval_field_parts(t, zz, f, h, dg);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DomainError) {
        fail(ErrorKind::LeftDomain, "trajectory left the domain of the vector field at " + at_time(t) + ": " + e.what());
      }
      throw;
    }
    const double at = prob.eval_a(t);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = at * f[i] + lambda * h[i];
      dz[i] = w[i];
    }
    const Matrix d1g = dg.block(0, 0, s, k);
    const Matrix d2g = dg.block(0, k, s, s);
    manifold::require_invertible(d2g, zz);
    rhs_v = d1g * w;
    const Vector v = linalg::solve(d2g, rhs_v);
    for (std::size_t i = 0; i < s; ++i) dz[k + i] = -v[i];
  };

  std::vector<double> times;
  const int m = std::max(2, opts.sample_count);
  for (int i = 1; i < m; ++i) times.push_back(t0 + (t1 - t0) * static_cast<double>(i) / (m - 1));
  times.back() = t1;

  numerics::OdeHooks hooks;
  hooks.after_step = [&](double t, std::vector<double>& y) {
    if (norm_inf(y) > opts.escape_bound) {
      fail(ErrorKind::BlowUp, "|z| exceeded " + std::to_string(opts.escape_bound) + " at " + at_time(t));
    }
    if (!box.contains(y)) fail(ErrorKind::LeftDomain, "trajectory left the domain at " + at_time(t));
    const double r = reproject(prob, y, t);
    traj.max_g_residual = std::max(traj.max_g_residual, r);
  };
  hooks.on_sample = [&](double t, std::span<const double> y) {
    traj.samples.push_back({t, Vector(y.begin(), y.end()), norm_inf(prob.eval_g(y))});
  };

  numerics::OdeOptions ode;
  ode.rtol = opts.rtol;
  ode.atol = opts.atol;
  ode.h_max = opts.h_max > 0.0 ? opts.h_max : std::abs(t1 - t0) / 8.0;
  const auto stats = numerics::dormand_prince(rhs, t0, t1, z, ode, times, hooks);
  traj.steps = stats.accepted;
  if (traj.max_g_residual > 1e-8) {
    fail(ErrorKind::NoConvergence, "constraint drift " + std::to_string(traj.max_g_residual) + " exceeds 1e-8");
  }
  return traj;
}

double phi_a(const DaeProblem& prob, double t) {
  if (t == 0.0) return 0.0;
  auto a = [&prob](double u) { return prob.eval_a(u); };
  return numerics::gauss_kronrod(a, 0.0, t, 1e-13).value;
}

Vector default_q_guess(const DaeProblem& prob) {
  const std::size_t k = prob.k();
  const Vector c = prob.box().center();
  Vector q(prob.s(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!prob.box().bounds[k + i].contains(0.0)) q[i] = c[k + i];
  }
  return q;
}

MonodromyReport poincare_T(const DaeProblem& prob, double lambda, std::span<const double> x0,
                           const PoincareOptions& opts, std::optional<Vector> q_guess) {
  const std::size_t k = prob.k();
  const double horizon = opts.horizon.value_or(prob.period());
  const Vector guess = q_guess ? *q_guess : default_q_guess(prob);

  IntegrateOptions io = opts.integrate;
  io.sample_count = 2;

  MonodromyReport rep;
  rep.x0.assign(x0.begin(), x0.end());
  const std::size_t runs = opts.with_monodromy ? k + 1 : 1;
  std::vector<Vector> ends(runs);
  std::vector<Vector> y_starts(runs);
  std::vector<double> drift(runs, 0.0);
  Vector steps(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) steps[i] = opts.fd_scale * (1.0 + std::abs(x0[i]));

  parallel_for(runs, [&](std::size_t r) {
    Vector p = rep.x0;
    if (r > 0) p[r - 1] += steps[r - 1];
    const auto start = manifold::project(prob, p, guess);
    const auto traj = integrate(prob, lambda, start, 0.0, horizon, io);
    ends[r] = traj.samples.back().z;
    y_starts[r] = start.z.q;
    drift[r] = traj.max_g_residual;
  });

  rep.y0 = y_starts[0];
  rep.p_t.assign(ends[0].begin(), ends[0].begin() + static_cast<std::ptrdiff_t>(k));
  rep.y_t.assign(ends[0].begin() + static_cast<std::ptrdiff_t>(k), ends[0].end());
  for (double d : drift) rep.max_g_residual = std::max(rep.max_g_residual, d);
  if (opts.with_monodromy) {
    rep.monodromy = Matrix(k, k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < k; ++r) rep.monodromy(r, c) = (ends[c + 1][r] - ends[0][r]) / steps[c];
    }
  }
  return rep;
}

std::string trajectory_csv(const Trajectory& traj, std::size_t k, std::size_t s) {
  std::ostringstream os;
  os << 't';
  for (std::size_t i = 0; i < k + s; ++i) os << ',' << state_variable_name(i, k);
  os << ",g_residual\n";
  char buf[40];
  for (const auto& smp : traj.samples) {
    std::snprintf(buf, sizeof buf, "%.12e", smp.t);
    os << buf;
    for (double v : smp.z) {
      std::snprintf(buf, sizeof buf, ",%.12e", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.12e\n", smp.g_residual);
    os << buf;
  }
  return os.str();
}

}  // namespace daeh::flow
