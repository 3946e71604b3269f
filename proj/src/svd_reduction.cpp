#include "daeh/svd_reduction.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "daeh/error.hpp"

namespace daeh::svd {

using expr::Expr;
using linalg::norm_inf;

Matrix ImplicitLinearDae::eval_c(double t) const {
  const std::size_t m = n();
  Matrix out(m, m);
  const expr::Bindings b{{"t", t}};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = c[i][j].eval(b);
  return out;
}

Vector ImplicitLinearDae::eval_s(std::span<const double> x) const {
  expr::Bindings b;
  for (std::size_t i = 0; i < x.size(); ++i) b["x" + std::to_string(i + 1)] = x[i];
  Vector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].eval(b);
  return out;
}

SvdFactors svd(const Matrix& e) {
  const auto r = linalg::jacobi_svd(e);
  return {r.u.transpose(), r.sigma, r.v.transpose()};
}

std::size_t numerical_rank(const Vector& sigma, double tol) {
  if (sigma.empty() || sigma[0] == 0.0) return 0;
  const double thr = tol * sigma[0];
  std::size_t rank = 0;
  for (double s : sigma) {
    if (s > thr / 100.0 && s < thr * 100.0) {
      std::ostringstream os;
      os << "singular value " << s << " has no clear gap from the rank threshold " << thr;
      fail(ErrorKind::RankAmbiguous, os.str());
    }
    if (s > thr) ++rank;
  }
  return rank;
}

namespace {

Expr linear_combination(const Matrix& m, std::size_t row, std::size_t c0, std::size_t nc,
                        const std::vector<Expr>& vars) {
  Expr acc = Expr::constant(0.0);
  bool first = true;
  for (std::size_t j = 0; j < nc; ++j) {
    const double w = m(row, c0 + j);
    if (w == 0.0) continue;
    Expr term = Expr::constant(w) * vars[j];
    acc = first ? term : acc + term;
    first = false;
  }
  return acc;
}

void check_square(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n || m.cols() != n) fail(ErrorKind::InvalidProblem, std::string(what) + " must be n x n");
}

}  // namespace

SvdReduction reduce_with(const ImplicitLinearDae& dae, const SvdFactors& f, std::size_t s, const ReduceOptions& opts) {
  const std::size_t n = dae.n();
  const std::size_t r = n - s;
  const Matrix at = f.p * dae.a_mat * f.q.transpose();
  Matrix e_s(s, s);
  for (std::size_t i = 0; i < s; ++i) e_s(i, i) = f.sigma[i];
  const Matrix a11 = at.block(0, 0, s, s);
  const Matrix a12 = at.block(0, s, s, r);
  const Matrix a21 = at.block(s, 0, r, s);
  const Matrix a22 = at.block(s, s, r, r);

  {
    const auto sv = linalg::jacobi_svd(a22);
    const double scale = std::max(linalg::norm_fro(at), 1e-300);
    if (sv.sigma.back() <= opts.rank_tol * scale) {
      std::ostringstream os;
      os << "A22 is singular (smallest singular value " << sv.sigma.back() << ")";
      fail(ErrorKind::RankDeficientA22, os.str());
    }
  }

  // kernel compatibility and invertibility of the reduced forcing
  double kernel_res = 0.0;
  double offblock = 0.0;
  for (int j = 0; j < opts.samples; ++j) {
    const double t = dae.period * j / opts.samples;
    const Matrix c = dae.eval_c(t);
    const double cn = std::max(linalg::norm_fro(c), 1e-300);
    const Matrix pc = f.p * c;
    const Matrix pcq = pc * f.q.transpose();
    kernel_res = std::max(kernel_res, linalg::norm_fro(pc.block(s, 0, r, n)) / cn);
    offblock = std::max(offblock, linalg::norm_fro(pcq.block(0, s, s, r)) / cn);
    Matrix top(n, n);
    top.set_block(0, 0, pc.block(0, 0, s, n));
    const auto sv = linalg::jacobi_svd(top);
    if (!(sv.sigma[s - 1] > opts.rank_tol * sv.sigma[0])) {
      fail(ErrorKind::KernelMismatch, "ker C^T(t) is larger than ker E^T at t = " + std::to_string(t));
    }
  }
  if (kernel_res > 1e-8) {
    fail(ErrorKind::KernelMismatch, "ker E^T is not contained in ker C^T(t) (relative residual " +
                                        std::to_string(kernel_res) + ")");
  }
  if (offblock > 1e-8) {
    fail(ErrorKind::KernelMismatch, "upper-right block of P C(t) Q^T does not vanish (relative norm " +
                                        std::to_string(offblock) + "); ker C(t) differs from ker E");
  }

  // reduced semi-explicit problem in x1..xs, y1..yr
  std::vector<Expr> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(Expr::variable(state_variable_name(i, s)));
  std::vector<Expr> xs(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(s));
  std::vector<Expr> ys(w.begin() + static_cast<std::ptrdiff_t>(s), w.end());

  Matrix es_inv(s, s);
  for (std::size_t i = 0; i < s; ++i) es_inv(i, i) = 1.0 / f.sigma[i];
  const Matrix f1 = es_inv * a11;
  const Matrix f2 = es_inv * a12;

  ProblemSpec spec;
  spec.name = "svd-reduced";
  spec.k = s;
  spec.s = r;
  for (std::size_t i = 0; i < s; ++i) {
    Expr e = linear_combination(f1, i, 0, s, xs);
    if (r > 0) e = e + linear_combination(f2, i, 0, r, ys);
    spec.f.push_back(e);
  }
  for (std::size_t i = 0; i < r; ++i) {
    spec.g.push_back(linear_combination(a21, i, 0, s, xs) + linear_combination(a22, i, 0, r, ys));
  }
  // S evaluated at x_orig = Q^T w
  const Matrix qt = f.q.transpose();
  std::map<std::string, Expr, std::less<>> orig;
  for (std::size_t i = 0; i < n; ++i) orig["x" + std::to_string(i + 1)] = linear_combination(qt, i, 0, n, w);
  std::vector<Expr> s_sub;
  for (const auto& e : dae.s) s_sub.push_back(e.substitute(orig));
  for (std::size_t i = 0; i < s; ++i) {
    // row i of E_s^{-1} P C(t)
    Expr acc = Expr::constant(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      Expr coeff = Expr::constant(0.0);
      bool any = false;
      for (std::size_t l = 0; l < n; ++l) {
        const double pw = f.p(i, l) / f.sigma[i];
        if (pw == 0.0) continue;
        Expr term = Expr::constant(pw) * dae.c[l][j];
        coeff = any ? coeff + term : term;
        any = true;
      }
      if (any) acc = acc + coeff * s_sub[j];
    }
    spec.h.push_back(acc);
  }
  spec.a = dae.a;
  spec.period = dae.period;
  spec.domain.bounds.assign(n, Interval{});
  spec.cap_half_width = 1e3;

  return SvdReduction{f, s, e_s, a11, a12, a21, a22, offblock, kernel_res, DaeProblem::create(std::move(spec))};
}

SvdReduction reduce(const ImplicitLinearDae& dae, const ReduceOptions& opts) {
  const std::size_t n = dae.n();
  if (n < 2) fail(ErrorKind::InvalidProblem, "need n >= 2");
  check_square(dae.e, n, "E");
  check_square(dae.a_mat, n, "A");
  if (dae.c.size() != n || dae.s.size() != n) fail(ErrorKind::InvalidProblem, "C must be n x n and S of length n");
  for (const auto& row : dae.c) {
    if (row.size() != n) fail(ErrorKind::InvalidProblem, "C must be n x n");
    for (const auto& e : row) {
      for (const auto& v : e.free_variables()) {
        if (v != "t") fail(ErrorKind::InvalidProblem, "C entries may only depend on t, found '" + v + "'");
      }
    }
  }
  for (const auto& e : dae.s) {
    for (const auto& v : e.free_variables()) {
      bool ok = false;
      for (std::size_t i = 0; i < n; ++i) ok = ok || v == "x" + std::to_string(i + 1);
      if (!ok) fail(ErrorKind::InvalidProblem, "S entries may only depend on x1..xn, found '" + v + "'");
    }
  }
  const SvdFactors f = svd(dae.e);
  const std::size_t s = numerical_rank(f.sigma, opts.rank_tol);
  if (s == 0 || s == n) {
    fail(ErrorKind::InvalidProblem, "rank E = " + std::to_string(s) + " must lie strictly between 0 and n");
  }
  return reduce_with(dae, f, s, opts);
}

RankInvarianceReport a22_rank_invariance_check(const ImplicitLinearDae& dae, int mixings, std::uint64_t seed,
                                               const ReduceOptions& opts) {
  const std::size_t n = dae.n();
  const SvdFactors f = svd(dae.e);
  const std::size_t s = numerical_rank(f.sigma, opts.rank_tol);
  if (s == 0 || s == n) fail(ErrorKind::InvalidProblem, "rank E must lie strictly between 0 and n");
  const std::size_t r = n - s;
  auto a22_rank = [&](const SvdFactors& ff) {
    const Matrix at = ff.p * dae.a_mat * ff.q.transpose();
    const auto sv = linalg::jacobi_svd(at.block(s, s, r, r));
    const double thr = opts.rank_tol * std::max(linalg::norm_fro(at), 1e-300);
    std::size_t rank = 0;
    for (double v : sv.sigma) rank += v > thr ? 1 : 0;
    return rank;
  };
  RankInvarianceReport rep;
  rep.ranks.push_back(a22_rank(f));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (int m = 0; m < mixings; ++m) {
    // the range blocks may only flip signs (paired); the kernel blocks mix freely
    Matrix left = Matrix::identity(n);
    Matrix right = Matrix::identity(n);
    for (std::size_t i = 0; i < s; ++i) {
      const double sg = coin(rng) ? -1.0 : 1.0;
      left(i, i) = sg;
      right(i, i) = sg;
    }
    left.set_block(s, s, linalg::random_orthogonal(r, rng));
    right.set_block(s, s, linalg::random_orthogonal(r, rng));
    SvdFactors mixed{left * f.p, f.sigma, right * f.q};
    rep.ranks.push_back(a22_rank(mixed));
  }
  rep.invariant = std::all_of(rep.ranks.begin(), rep.ranks.end(), [&](std::size_t v) { return v == rep.ranks[0]; });
  return rep;
}

Vector to_original(const SvdReduction& red, std::span<const double> z) {
  return red.factors.q.transpose() * z;
}

double roundtrip_residual(const ImplicitLinearDae& dae, const SvdReduction& red, double lambda,
                          const flow::Trajectory& traj) {
  const auto& smp = traj.samples;
  if (smp.size() < 5) fail(ErrorKind::InvalidProblem, "need at least 5 samples for the roundtrip residual");
  const double dt = smp[1].t - smp[0].t;
  std::vector<Vector> xo;
  for (const auto& s : smp) xo.push_back(to_original(red, s.z));
  const std::size_t n = dae.n();
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < smp.size(); ++i) {
    Vector xdot(n);
    for (std::size_t c = 0; c < n; ++c) {
      xdot[c] = (-xo[i + 2][c] + 8.0 * xo[i + 1][c] - 8.0 * xo[i - 1][c] + xo[i - 2][c]) / (12.0 * dt);
    }
    const double t = smp[i].t;
    const double at = dae.a.eval({{"t", t}});
    const Vector lhs = dae.e * xdot;
    const Vector ax = dae.a_mat * xo[i];
    const Vector cs = dae.eval_c(t) * dae.eval_s(xo[i]);
    for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(lhs[c] - at * ax[c] - lambda * cs[c]));
  }
  return worst;
}

ImplicitLinearDae constructed_example(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 5, r = 3;
  auto random = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
  };
  const Matrix l = random(n, r);
  const Matrix rr = random(r, n);
  const Matrix k = random(n, n);
  const Matrix k3 = random(r, r);
  ImplicitLinearDae dae;
  dae.e = l * rr;
  const Matrix nmix = linalg::null_space_basis(l.transpose()) * linalg::null_space_basis(rr).transpose();
  dae.a_mat = (dae.e + nmix) * -1.0 + k * 0.1;
  const Matrix lkr = l * k3 * rr;
  const Expr wave = Expr::parse("sin(2*pi*t)");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Expr> row;
    for (std::size_t j = 0; j < n; ++j) row.push_back(Expr::constant(dae.e(i, j)) + Expr::constant(0.3 * lkr(i, j)) * wave);
    dae.c.push_back(std::move(row));
    dae.s.push_back(Expr::parse("sin(x" + std::to_string(i + 1) + ")"));
  }
  dae.a = Expr::parse("1 + 0.5*sin(2*pi*t)");
  dae.period = 1.0;
  return dae;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

ImplicitLinearDae parse_implicit_text(const std::string& text) {
  ImplicitLinearDae dae;
  std::vector<Vector> e_rows, a_rows;
  std::string section;
  bool have_a = false;
  bool have_t = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "E" && section != "A" && section != "C" && section != "S") {
        parse_fail(lineno, "unknown section [" + section + "]");
      }
      continue;
    }
    if (section.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) parse_fail(lineno, "expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      try {
        if (key == "a") {
          dae.a = Expr::parse(val);
          have_a = true;
        } else if (key == "T") {
          dae.period = Expr::parse(val).eval({});
          have_t = true;
        } else {
          parse_fail(lineno, "unknown key '" + key + "'");
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError && std::string(e.what()).rfind("line ", 0) == 0) throw;
        parse_fail(lineno, e.what());
      }
    } else if (section == "E" || section == "A") {
      std::istringstream row(line);
      Vector v;
      std::string tok;
      while (row >> tok) {
        try {
          std::size_t used = 0;
          v.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          parse_fail(lineno, "not a number: '" + tok + "'");
        }
      }
      (section == "E" ? e_rows : a_rows).push_back(v);
    } else if (section == "C") {
      std::vector<Expr> row;
      std::istringstream parts(line);
      std::string tok;
      while (std::getline(parts, tok, ',')) {
        try {
          row.push_back(Expr::parse(trim(tok)));
        } catch (const Error& e) {
          parse_fail(lineno, e.what());
        }
      }
      dae.c.push_back(std::move(row));
    } else {
      try {
        dae.s.push_back(Expr::parse(line));
      } catch (const Error& e) {
        parse_fail(lineno, e.what());
      }
    }
  }
  auto to_matrix = [](const std::vector<Vector>& rows, const char* what) {
    if (rows.empty()) fail(ErrorKind::ParseError, std::string("missing [") + what + "] section");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) fail(ErrorKind::ParseError, std::string("ragged rows in [") + what + "]");
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
  };
  dae.e = to_matrix(e_rows, "E");
  dae.a_mat = to_matrix(a_rows, "A");
  if (!have_a) dae.a = Expr::constant(1.0);
  if (!have_t) fail(ErrorKind::ParseError, "missing T = <period>");
  return dae;
}

ImplicitLinearDae load_implicit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Usage, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_implicit_text(ss.str());
}

}  // namespace daeh::svd
