#include "daeh/degree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "daeh/error.hpp"
#include "daeh/parallel.hpp"

namespace daeh::degree {

using linalg::norm_inf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_norm_product(const Matrix& j) {
  double prod = 1.0;
  for (std::size_t i = 0; i < j.rows(); ++i) prod *= linalg::norm2(j.row(i));
  return prod;
}

bool is_nondegenerate(const Matrix& j, double det) {
  // Floor of 1 so Jacobians that vanish with the map (z^2 near 0) stay degenerate.
  const double scale = std::max(1.0, row_norm_product(j));
  return std::abs(det) > kDegenerateRel * scale;
}

enum class NewtonOutcome { Converged, LeftBox, NotConverged };

struct NewtonRun {
  NewtonOutcome outcome = NewtonOutcome::NotConverged;
  Vector z;
  double residual = kInf;
};

NewtonRun newton(const DaeProblem& prob, const Box& box, Vector z, const ZeroSearchOptions& opts) {
  const Box& dom = prob.box();
  NewtonRun run;
  Vector F;
  try {
    F = prob.eval_F(z);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DomainError) return run;
    throw;
  }
  double res = norm_inf(F);
  double last_step = kInf;
  for (int it = 0; it < opts.max_iterations && res > 0.0; ++it) {
    const Matrix j = prob.jac_F(z);
    const auto lu = linalg::lu(j);
    if (lu.exactly_singular()) break;
    const Vector step = lu.solve(F);
    const double step_norm = norm_inf(step);
    if (!std::isfinite(step_norm)) break;
    // accept when the simplified correction J(z)^{-1} F(trial) shrinks or
    // ||F|| drops; ||F|| alone stalls near degenerate zeros
    double alpha = 1.0;
    Vector trial(z.size());
    Vector trial_F;
    bool accepted = false;
    for (int half = 0; half < 30 && !accepted; ++half) {
      for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] - alpha * step[i];
      if (dom.contains(trial)) {
        try {
          trial_F = prob.eval_F(trial);
          const double simplified = norm_inf(lu.solve(trial_F));
          accepted = simplified < step_norm || norm_inf(trial_F) < res;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DomainError) throw;
        }
      }
      if (!accepted) alpha *= 0.5;
    }
    if (!accepted) break;
    z = trial;
    F = std::move(trial_F);
    res = norm_inf(F);
    last_step = alpha * step_norm;
    if (last_step <= 1e-13 * (1.0 + norm_inf(z))) break;
  }
  if (res == 0.0) last_step = 0.0;
  run.z = std::move(z);
  run.residual = res;
  const bool settled = last_step <= 1e-8 * (1.0 + norm_inf(run.z));
  if (settled && res <= std::max(opts.newton_tol, 1e-10)) {
    run.outcome = box.contains(run.z) ? NewtonOutcome::Converged : NewtonOutcome::LeftBox;
  } else if (!box.contains(run.z)) {
    run.outcome = NewtonOutcome::LeftBox;
  }
  return run;
}

std::vector<Vector> grid_centers(const Box& box, int m) {
  const std::size_t n = box.dim();
  std::vector<Vector> out;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vector p(n);
    for (std::size_t d = 0; d < n; ++d) {
      const auto& b = box.bounds[d];
      p[d] = b.lo + (b.hi - b.lo) * (idx[d] + 0.5) / m;
    }
    out.push_back(std::move(p));
    std::size_t d = 0;
    while (d < n && ++idx[d] == m) idx[d++] = 0;
    if (d == n) break;
  }
  return out;
}

double dist_inf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Psi restricted to the tangent space, as a k x k matrix in the basis B.
Matrix tangent_derivative(const DaeProblem& prob, std::span<const double> z, const Matrix& basis) {
  const std::size_t n = prob.n();
  const std::size_t k = prob.k();
  const double h = 1e-6 * (1.0 + norm_inf(z));
  Matrix d(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    Vector zp(z.begin(), z.end());
    Vector zm(z.begin(), z.end());
    for (std::size_t i = 0; i < n; ++i) {
      zp[i] += h * basis(i, j);
      zm[i] -= h * basis(i, j);
    }
    const Vector vp = manifold::psi_at(prob, zp).joined();
    const Vector vm = manifold::psi_at(prob, zm).joined();
    for (std::size_t i = 0; i < n; ++i) d(i, j) = (vp[i] - vm[i]) / (2.0 * h);
  }
  return basis.transpose() * d;
}

// Index of a zero of a one-dimensional tangent field from the sign of f on
// both sides along M.
int sign_change_index(const DaeProblem& prob, const PointKS& z0) {
  std::optional<int> found;
  for (double r : {1e-3, 1e-2}) {
    int signs[2];
    for (int side = 0; side < 2; ++side) {
      Vector p = z0.p;
      p[0] += side == 0 ? r : -r;
      const auto pt = manifold::project(prob, p, z0.q);
      const double u = prob.eval_f(pt.z.joined())[0];
      if (u == 0.0) {
        fail(ErrorKind::DegenerateTangentZero, "Psi vanishes next to the degenerate zero; index undetermined");
      }
      signs[side] = u > 0.0 ? 1 : -1;
    }
    const int idx = (signs[0] - signs[1]) / 2;
    if (found && *found != idx) {
      fail(ErrorKind::DegenerateTangentZero, "sign-change index depends on the radius");
    }
    found = idx;
  }
  return *found;
}

}  // namespace

Box bounded_box(const DaeProblem& prob, const Box& box) { return box.capped(prob.cap_half_width()); }

ZeroSearchResult find_zeros(const DaeProblem& prob, const Box& box_in, const ZeroSearchOptions& opts) {
  const Box box = bounded_box(prob, box_in);
  if (box.dim() != prob.n()) fail(ErrorKind::Usage, "box dimension does not match k + s");
  if (box.empty()) fail(ErrorKind::Usage, "box is empty");
  if (opts.grid_per_dim < 1) fail(ErrorKind::Usage, "grid must be positive");

  std::vector<Vector> starts = grid_centers(box, opts.grid_per_dim);
  if (opts.seed != 0) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(starts.begin(), starts.end(), rng);
  }
  std::vector<NewtonRun> runs(starts.size());
  const std::size_t chunk = 64;
  const std::size_t chunks = (starts.size() + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(starts.size(), (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) runs[i] = newton(prob, box, starts[i], opts);
  });

  ZeroSearchResult out;
  out.starts = static_cast<long>(starts.size());
  std::vector<NewtonRun> reps;
  for (auto& r : runs) {
    if (r.outcome == NewtonOutcome::LeftBox) {
      ++out.left_box;
      continue;
    }
    if (r.outcome == NewtonOutcome::NotConverged) {
      ++out.not_converged;
      continue;
    }
    bool merged = false;
    for (auto& rep : reps) {
      if (dist_inf(rep.z, r.z) <= opts.dedupe_radius) {
        if (r.residual < rep.residual || (r.residual == rep.residual && norm_inf(r.z) < norm_inf(rep.z))) rep = r;
        merged = true;
        break;
      }
    }
    if (!merged) reps.push_back(r);
  }
  if (out.left_box > 0) {
    out.warnings.push_back(std::to_string(out.left_box) + " Newton runs converged or ended outside the box");
  }
  if (out.not_converged > 0) {
    out.warnings.push_back(std::to_string(out.not_converged) + " Newton runs did not converge");
  }
  std::sort(reps.begin(), reps.end(), [](const NewtonRun& a, const NewtonRun& b) { return a.z < b.z; });
  for (auto& r : reps) {
    ZeroRecord rec;
    rec.z = PointKS::split(r.z, prob.k());
    rec.residual = r.residual;
    const Matrix j = prob.jac_F(r.z);
    rec.det_jac = linalg::determinant(j);
    rec.nondegenerate = is_nondegenerate(j, rec.det_jac);
    out.zeros.push_back(std::move(rec));
  }
  return out;
}

int winding_number(const DaeProblem& prob, std::span<const double> z, const WindingOptions& opts) {
  if (prob.n() != 2) {
    fail(ErrorKind::DegenerateUnsupportedDim, "winding index needs k + s = 2, got " + std::to_string(prob.n()));
  }
  const double r = opts.radius;
  auto angle = [&](double th) {
    const double pt[2] = {z[0] + r * std::cos(th), z[1] + r * std::sin(th)};
    const Vector F = prob.eval_F(std::span<const double>(pt, 2));
    if (F[0] == 0.0 && F[1] == 0.0) {
      fail(ErrorKind::AmbiguousWinding, "F vanishes on the winding circle");
    }
    return std::atan2(F[1], F[0]);
  };
  auto wrap = [](double d) { return std::remainder(d, 2.0 * std::numbers::pi); };

  const int m = std::max(opts.min_points, 16);
  double total = 0.0;
  double th0 = 0.0;
  double a0 = angle(th0);
  const double first = a0;
  for (int j = 1; j <= m; ++j) {
    const double th1 = 2.0 * std::numbers::pi * j / m;
    const double a1 = j == m ? first : angle(th1);
    // bisect until consecutive samples turn by less than pi/4
    std::vector<std::pair<double, double>> stack{{th1, a1}};
    double ta = th0;
    double aa = a0;
    int depth_guard = 0;
    while (!stack.empty()) {
      auto [tb, ab] = stack.back();
      if (std::abs(wrap(ab - aa)) > std::numbers::pi / 4.0 && tb - ta > 1e-12) {
        if (++depth_guard > 100000) fail(ErrorKind::AmbiguousWinding, "winding refinement did not settle");
        const double tm = 0.5 * (ta + tb);
        stack.push_back({tm, angle(tm)});
        continue;
      }
      total += wrap(ab - aa);
      ta = tb;
      aa = ab;
      stack.pop_back();
    }
    th0 = th1;
    a0 = a1;
  }
  const double w = total / (2.0 * std::numbers::pi);
  const double rounded = std::round(w);
  if (std::abs(w - rounded) > 1e-3) {
    fail(ErrorKind::AmbiguousWinding, "total turning / 2pi = " + std::to_string(w) + " is not an integer");
  }
  return static_cast<int>(rounded);
}

int index_of(const DaeProblem& prob, const ZeroRecord& zero, const std::vector<ZeroRecord>& others,
             const WindingOptions& opts) {
  if (zero.nondegenerate) return zero.det_jac > 0.0 ? 1 : -1;
  if (prob.n() != 2) {
    fail(ErrorKind::DegenerateUnsupportedDim,
         "degenerate zero needs a winding index, only available for k + s = 2");
  }
  const Vector z = zero.z.joined();
  for (const auto& o : others) {
    const Vector w = o.z.joined();
    const double d = linalg::norm2(Vector{w[0] - z[0], w[1] - z[1]});
    if (d > 0.0 && d <= 2.0 * opts.radius) {
      fail(ErrorKind::AmbiguousWinding, "zero is not isolated at the winding radius");
    }
  }
  return winding_number(prob, z, opts);
}

double boundary_min_norm(const DaeProblem& prob, const Box& box, int points_per_edge) {
  const std::size_t n = box.dim();
  int m = std::max(2, points_per_edge);
  while (n > 1 && 2.0 * n * std::pow(static_cast<double>(m), static_cast<double>(n - 1)) > 2e5 && m > 2) --m;
  double best = kInf;
  for (std::size_t d = 0; d < n; ++d) {
    for (int side = 0; side < 2; ++side) {
      std::vector<int> idx(n, 0);
      for (;;) {
        Vector p(n);
        std::size_t slot = 0;
        for (std::size_t e = 0; e < n; ++e) {
          const auto& b = box.bounds[e];
          if (e == d) {
            p[e] = side == 0 ? b.lo : b.hi;
          } else {
            p[e] = b.lo + (b.hi - b.lo) * idx[slot++] / (m - 1);
          }
        }
        best = std::min(best, norm_inf(prob.eval_F(p)));
        std::size_t c = 0;
        while (c + 1 < n && ++idx[c] == m) idx[c++] = 0;
        if (c + 1 >= n) break;
      }
    }
  }
  return best;
}

DegreeReport degree(const DaeProblem& prob, const Box& box_in, const DegreeOptions& opts) {
  DegreeReport rep;
  rep.box = bounded_box(prob, box_in);
  rep.grid_per_dim = opts.search.grid_per_dim;
  rep.boundary_min_norm = boundary_min_norm(prob, rep.box, 4 * opts.search.grid_per_dim + 1);
  if (!(rep.boundary_min_norm > opts.boundary_tol)) {
    std::ostringstream os;
    os << "F nearly vanishes on the box boundary (min |F| = " << rep.boundary_min_norm << ")";
    fail(ErrorKind::BoundaryZero, os.str());
  }
  auto found = find_zeros(prob, rep.box, opts.search);
  rep.warnings = found.warnings;
  rep.zeros = std::move(found.zeros);

  bool all_known = true;
  int total = 0;
  for (auto& z : rep.zeros) {
    try {
      z.index = index_of(prob, z, rep.zeros, opts.winding);
      z.index_method = z.nondegenerate ? "sign-det" : "winding";
      total += *z.index;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AmbiguousWinding && e.kind() != ErrorKind::DegenerateUnsupportedDim) throw;
      all_known = false;
      rep.warnings.push_back(std::string("index unknown: ") + e.what());
    }
  }
  if (all_known) rep.total_degree = total;

  if (opts.check_stability) {
    ZeroSearchOptions fine = opts.search;
    fine.grid_per_dim *= 2;
    const auto again = find_zeros(prob, rep.box, fine);
    rep.stable = again.zeros.size() == rep.zeros.size();
    for (std::size_t i = 0; rep.stable && i < rep.zeros.size(); ++i) {
      rep.stable = dist_inf(again.zeros[i].z.joined(), rep.zeros[i].z.joined()) <= fine.dedupe_radius;
    }
    if (!rep.stable) rep.warnings.push_back("zero set changed when the grid was doubled");
  }
  return rep;
}

PsiDegreeReport degree_psi(const DaeProblem& prob, const std::vector<ZeroRecord>& zeros) {
  PsiDegreeReport rep;
  for (const auto& zr : zeros) {
    const Vector z = zr.z.joined();
    const auto b = prob.blocks(z);
    Matrix dg(prob.s(), prob.n());
    dg.set_block(0, 0, b.d1g);
    dg.set_block(0, prob.k(), b.d2g);
    const Matrix basis = linalg::null_space_basis(dg);
    const Matrix a = tangent_derivative(prob, z, basis);
    PsiZero pz;
    pz.z = zr.z;
    pz.det = linalg::determinant(a);
    if (zr.nondegenerate && is_nondegenerate(a, pz.det)) {
      pz.index = pz.det > 0.0 ? 1 : -1;
      pz.method = "sign-det";
    } else if (prob.k() == 1) {
      pz.index = sign_change_index(prob, zr.z);
      pz.method = "sign-change";
    } else {
      fail(ErrorKind::DegenerateTangentZero, "degenerate zero of Psi with k > 1");
    }
    rep.total += pz.index;
    rep.zeros.push_back(std::move(pz));
  }
  return rep;
}

PsiDegreeReport degree_psi(const DaeProblem& prob, const Box& box, const ZeroSearchOptions& opts) {
  return degree_psi(prob, find_zeros(prob, box, opts).zeros);
}

}  // namespace daeh::degree
