#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include "common.hpp"
#include "daeh/flow.hpp"

using namespace daeh;
using testing::kind_of;
using testing::scalar_problem;

TEST_CASE("equilibrium stays put") {
  auto prob = builtin("example-3-7");
  auto z0 = manifold::ManifoldPoint::make(prob, PointKS{{0.0}, {0.0}});
  auto traj = flow::integrate(prob, 0.0, z0, 0.0, prob.period());
  REQUIRE(traj.samples.size() == 65);
  for (const auto& s : traj.samples) CHECK(linalg::norm_inf(s.z) == 0.0);
}

TEST_CASE("linear scalar flow matches the closed form") {
  // x' = a(t) (-x), a = 1 + 0.5 sin(2 pi t): x(t) = x0 exp(-phi_a(t))
  auto prob = scalar_problem("-x", "0", "1 + 0.5*sin(2*pi*t)");
  auto z0 = manifold::ManifoldPoint::make(prob, PointKS{{0.8}, {0.8}});
  auto traj = flow::integrate(prob, 0.0, z0, 0.0, 1.0);
  for (const auto& s : traj.samples) {
    const double phi = s.t - 0.5 / (2 * M_PI) * (std::cos(2 * M_PI * s.t) - 1.0);
    CHECK(s.z[0] == doctest::Approx(0.8 * std::exp(-phi)).epsilon(1e-10));
    CHECK(std::abs(s.z[1] - s.z[0]) <= 1e-8);
  }
  CHECK(flow::phi_a(prob, 0.25) == doctest::Approx(0.25 + 0.5 / (2 * M_PI)).epsilon(1e-12));

  // forced: x' = -x + lambda cos(2 pi t)
  auto forced = scalar_problem("-x", "cos(2*pi*t)");
  const double lambda = 0.3, w = 2 * M_PI;
  const double c1 = lambda / (1 + w * w), c2 = lambda * w / (1 + w * w);
  const double x0 = 1.0;
  auto tf = flow::integrate(forced, lambda, manifold::ManifoldPoint::make(forced, PointKS{{x0}, {x0}}), 0.0, 1.0);
  for (const auto& s : tf.samples) {
    const double exact = c1 * std::cos(w * s.t) + c2 * std::sin(w * s.t) + (x0 - c1) * std::exp(-s.t);
    CHECK(s.z[0] == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("semigroup property") {
  auto prob = builtin("example-4-6");
  auto z0 = manifold::project(prob, Vector{0.9}, Vector{0.0});
  auto whole = flow::integrate(prob, 0.2, z0, 0.0, 1.0);
  auto first = flow::integrate(prob, 0.2, z0, 0.0, 0.4);
  auto mid = manifold::ManifoldPoint::make(prob, PointKS::split(first.samples.back().z, 1), 1e-9);
  auto second = flow::integrate(prob, 0.2, mid, 0.4, 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(second.samples.back().z[i] == doctest::Approx(whole.samples.back().z[i]).epsilon(1e-9));
  }
}

TEST_CASE("constraint drift stays below tolerance") {
  std::mt19937_64 rng(8);
  for (const auto& name : builtin_names()) {
    auto prob = builtin(name);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    for (int i = 0; i < 3; ++i) {
      Vector p(prob.k());
      for (auto& v : p) v = u(rng);
      auto z0 = manifold::project(prob, p, flow::default_q_guess(prob));
      auto traj = flow::integrate(prob, 0.1, z0, 0.0, prob.period());
      CHECK(traj.max_g_residual <= 1e-8);
      for (const auto& s : traj.samples) CHECK(s.g_residual <= 1e-8);
    }
  }
}

TEST_CASE("time reparametrization") {
  for (const auto& name : builtin_names()) {
    auto prob = builtin(name);
    auto unit = prob.with_unit_drift();
    Vector p(prob.k(), 0.7);
    auto z0 = manifold::project(prob, p, flow::default_q_guess(prob));
    const double T = prob.period();
    auto with_a = flow::integrate(prob, 0.0, z0, 0.0, T);
    auto plain = flow::integrate(unit, 0.0, z0, 0.0, flow::phi_a(prob, T));
    const auto& za = with_a.samples.back().z;
    const auto& zp = plain.samples.back().z;
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(std::abs(za[i] - zp[i]) <= 1e-8);
  }
}

TEST_CASE("monodromy matches the variational equation") {
  // x' = -x + x^2 / 4: the derivative of the flow solves m' = (-1 + x / 2) m
  auto prob = scalar_problem("-x + x^2/4", "0");
  const double x0 = 0.6;
  auto rep = flow::poincare_T(prob, 0.0, Vector{x0});
  // closed form of the logistic-type flow: x(t) = x0 e^-t / (1 - x0 (1 - e^-t) / 4)
  const double e = std::exp(-1.0);
  const double d = 1 - x0 * (1 - e) / 4;
  CHECK(rep.p_t[0] == doctest::Approx(x0 * e / d).epsilon(1e-10));
  CHECK(rep.monodromy(0, 0) == doctest::Approx(e / (d * d)).epsilon(1e-7));
  CHECK(rep.y_t[0] == doctest::Approx(rep.p_t[0]).epsilon(1e-10));
}

TEST_CASE("integration errors") {
  auto blow = scalar_problem("x^2", "0");
  CHECK(kind_of([&] { flow::integrate(blow, 0.0, manifold::ManifoldPoint::make(blow, PointKS{{2.0}, {2.0}}), 0.0, 1.0); }) ==
        ErrorKind::BlowUp);

  ProblemSpec spec = blow.spec();
  spec.f = {expr::Expr::parse("1")};
  spec.domain.bounds = {Interval{-1.0, 1.0}, Interval{}};
  auto bounded = DaeProblem::create(spec);
  CHECK(kind_of([&] {
          flow::integrate(bounded, 0.0, manifold::ManifoldPoint::make(bounded, PointKS{{0.5}, {0.5}}), 0.0, 1.0);
        }) == ErrorKind::LeftDomain);
}

TEST_CASE("trajectory CSV") {
  auto prob = scalar_problem("-x", "0");
  flow::IntegrateOptions opts;
  opts.sample_count = 3;
  auto traj = flow::integrate(prob, 0.0, manifold::ManifoldPoint::make(prob, PointKS{{1.0}, {1.0}}), 0.0, 1.0, opts);
  auto csv = flow::trajectory_csv(traj, 1, 1);
  CHECK(csv.rfind("t,x1,y1,g_residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
