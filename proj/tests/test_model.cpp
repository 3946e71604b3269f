#include <doctest.h>

#include <cmath>
#include <random>

#include "daeh/error.hpp"
#include "daeh/manifold.hpp"
#include "daeh/model.hpp"

using namespace daeh;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Usage;
}

Matrix fd_jacobian(const DaeProblem& prob, std::span<const double> z) {
  const std::size_t n = z.size();
  Matrix j(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector zp(z.begin(), z.end()), zm = zp;
    const double h = 1e-6 * (1 + std::abs(z[c]));
    zp[c] += h;
    zm[c] -= h;
    auto fp = prob.eval_F(zp), fm = prob.eval_F(zm);
    for (std::size_t r = 0; r < n; ++r) j(r, c) = (fp[r] - fm[r]) / (2 * h);
  }
  return j;
}

const char* kLinearText = R"(# a linear test problem
[dims]
k = 2
s = 1
[f]
f1 = -x1 + 2*x2
f2 = 3*x1 - y1
[g]
g1 = y1 - x1 - x2
[h]
h1 = cos(t)
h2 = 0
[a]
a = 1
[period]
T = 2*pi
[domain]
x1 = -inf, inf
x2 = -1, 1
y1 = -inf, inf
)";

}  // namespace

TEST_CASE("built-in problems") {
  auto e37 = builtin("example-3-7");
  CHECK(e37.k() == 1);
  CHECK(e37.s() == 1);
  CHECK(e37.period() == doctest::Approx(2 * M_PI));
  CHECK(e37.a_mean() == doctest::Approx(2 * std::log(3.0) / (2 * M_PI)).epsilon(1e-8));
  CHECK(linalg::norm_inf(e37.eval_F(Vector{0.0, 0.0})) == 0.0);
  CHECK(linalg::max_abs_diff(e37.jac_F(Vector{0.0, 0.0}), Matrix::identity(2)) < 1e-14);

  auto r = builtin("reactor");
  CHECK(r.k() == 2);
  CHECK(r.s() == 1);
  CHECK(r.a_mean() == doctest::Approx(1.0));

  auto e46 = builtin("example-4-6");
  const double s2 = std::sqrt(2.0);
  CHECK(linalg::norm_inf(e46.eval_F(Vector{s2, s2})) < 1e-12);
  CHECK(linalg::norm_inf(e46.eval_F(Vector{-s2, -s2})) < 1e-12);
  auto f10 = e46.eval_F(Vector{1.0, 0.0});
  CHECK(f10[0] == 0.0);
  CHECK(f10[1] == doctest::Approx(-1.0));

  CHECK(kind_of([] { builtin("nope"); }) == ErrorKind::UnknownBuiltin);
}

TEST_CASE("Jacobian matches finite differences") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (const auto& name : builtin_names()) {
    auto prob = builtin(name);
    for (int i = 0; i < 20; ++i) {
      Vector z(prob.n());
      for (auto& v : z) v = u(rng);
      Matrix ad = prob.jac_F(z);
      Matrix fd = fd_jacobian(prob, z);
      CHECK(linalg::max_abs_diff(ad, fd) <= 1e-5 * (1 + linalg::norm_inf(ad)));
    }
  }
}

TEST_CASE("d2g is invertible on and near M for the built-ins") {
  std::mt19937_64 rng(4);
  for (const auto& name : builtin_names()) {
    auto prob = builtin(name);
    const Box box = prob.box();
    for (int i = 0; i < 200; ++i) {
      Vector z(prob.n());
      for (std::size_t j = 0; j < prob.n(); ++j) {
        std::uniform_real_distribution<double> u(std::max(box.bounds[j].lo, -3.0) + 0.1,
                                                  std::min(box.bounds[j].hi, 3.0) - 0.1);
        z[j] = u(rng);
      }
      CHECK(std::abs(linalg::scaled_determinant(prob.d2g(z))) > 1e-12);
      try {
        auto m = manifold::project(prob, PointKS::split(z, prob.k()).p, Vector(prob.s(), 0.1));
        CHECK(std::abs(linalg::scaled_determinant(prob.d2g(m.z.joined()))) > 1e-12);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LeftDomain);
      }
    }
  }
}

TEST_CASE("theta_b transform") {
  auto raw = example_3_7_raw();
  auto prob = transform_theta_b(raw);
  // drift coefficient is (b' + a) / b
  for (double t : {0.3, 1.9, 4.4}) {
    const double expect = (std::cos(t) + std::abs(std::cos(t))) / (2 + std::sin(t));
    CHECK(prob.eval_a(t) == doctest::Approx(expect));
  }
  PointKS w{{1.2}, {0.3}};
  auto back = pullback_theta_b(raw, 0.5, w);
  CHECK(back.p[0] == doctest::Approx(1.2 / (2 + std::sin(0.5))));
  CHECK(back.q[0] == 0.3);

  // b = 1 leaves the problem unchanged
  raw.b = expr::Expr::constant(1.0);
  auto same = transform_theta_b(raw);
  for (double t : {0.1, 2.0}) CHECK(same.eval_a(t) == doctest::Approx(std::abs(std::cos(t))));
  CHECK(same.eval_h(0.7, Vector{0.4, 0.0})[0] == doctest::Approx(raw.h[0].eval({{"t", 0.7}, {"x", 0.4}, {"y", 0.0}})));
}

TEST_CASE("problem validation") {
  ProblemSpec spec;
  spec.k = 1;
  spec.s = 1;
  spec.f = {expr::Expr::parse("x")};
  spec.g = {expr::Expr::parse("y")};
  spec.h = {expr::Expr::parse("0")};
  spec.period = 1.0;

  auto bad_period = spec;
  bad_period.a = expr::Expr::parse("1 + sin(t)");
  CHECK(kind_of([&] { DaeProblem::create(bad_period); }) == ErrorKind::InvalidProblem);

  auto zero_mean = spec;
  zero_mean.a = expr::Expr::parse("sin(2*pi*t)");
  CHECK(kind_of([&] { DaeProblem::create(zero_mean); }) == ErrorKind::InvalidProblem);

  auto bad_h = spec;
  bad_h.a = expr::Expr::parse("1");
  bad_h.h = {expr::Expr::parse("t")};
  CHECK(kind_of([&] { DaeProblem::create(bad_h); }) == ErrorKind::InvalidProblem);

  auto stray = spec;
  stray.a = expr::Expr::parse("1");
  stray.f = {expr::Expr::parse("x + w")};
  CHECK(kind_of([&] { DaeProblem::create(stray); }) == ErrorKind::InvalidProblem);

  auto ok = spec;
  ok.a = expr::Expr::parse("2");
  CHECK(DaeProblem::create(ok).a_mean() == doctest::Approx(2.0));
}

TEST_CASE("problem file format") {
  auto spec = parse_problem_text(kLinearText);
  CHECK(spec.k == 2);
  CHECK(spec.s == 1);
  CHECK(spec.period == doctest::Approx(2 * M_PI));
  CHECK(spec.domain.bounds[1].lo == -1.0);
  CHECK(std::isinf(spec.domain.bounds[0].hi));
  auto prob = DaeProblem::create(spec);
  auto f = prob.eval_F(Vector{1.0, 2.0, 3.0});
  CHECK(f[0] == doctest::Approx(3.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(0.0));

  CHECK(kind_of([] { parse_problem_text("[dims]\nk = 1\n"); }) == ErrorKind::InvalidProblem);
  CHECK(kind_of([] { parse_problem_text("[bogus]\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { load_problem_file("/nonexistent/problem.txt"); }) != ErrorKind::DomainError);
}

TEST_CASE("solve_constraint") {
  auto e37 = builtin("example-3-7");
  CHECK(std::abs(manifold::solve_constraint(e37, Vector{0.0}, Vector{0.5})[0]) < 1e-12);

  auto r = builtin("reactor");
  auto y = manifold::solve_constraint(r, Vector{1.0, 1.0}, Vector{0.0});
  CHECK(y[0] == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-13));

  // q - 1 + q^3 / 2 = 0 by bisection
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - 1 + 0.5 * mid * mid * mid < 0 ? lo : hi) = mid;
  }
  auto e46 = builtin("example-4-6");
  CHECK(manifold::solve_constraint(e46, Vector{1.0}, Vector{0.0})[0] == doctest::Approx(lo).epsilon(1e-13));
}

TEST_CASE("tangent lifts") {
  auto e46 = builtin("example-4-6");
  auto m = manifold::project(e46, Vector{0.8}, Vector{0.0});
  CHECK(m.g_residual <= 1e-12);
  auto v = manifold::psi(e46, m);
  CHECK(v.u[0] == doctest::Approx(e46.eval_f(m.z.joined())[0]));
  CHECK(manifold::tangency_residual(e46, m.z.joined(), v) <= 1e-8);
  auto w = manifold::upsilon(e46, 0.25, m);
  CHECK(w.u[0] == doctest::Approx(std::cos(2 * M_PI * 0.25)).epsilon(1e-12));
  CHECK(manifold::tangency_residual(e46, m.z.joined(), w) <= 1e-8);

  auto r = builtin("reactor");
  auto mr = manifold::project(r, Vector{1.0, 2.0}, Vector{0.0});
  CHECK(manifold::tangency_residual(r, mr.z.joined(), manifold::psi(r, mr)) <= 1e-8);

  CHECK(kind_of([&] { manifold::ManifoldPoint::make(e46, PointKS{{1.0}, {0.0}}); }) == ErrorKind::InvalidProblem);
}
