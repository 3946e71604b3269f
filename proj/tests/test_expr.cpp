#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "daeh/error.hpp"
#include "daeh/expr.hpp"

using daeh::Error;
using daeh::ErrorKind;
using daeh::expr::Bindings;
using daeh::expr::Expr;

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

// Random smooth expression in x, y, z; only functions that stay finite on (-2, 2)^3.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  const char* vars[] = {"x", "y", "z"};
  if (depth == 0) {
    int r = pick(rng);
    if (r < 7) return vars[r % 3];
    return std::to_string(1 + r % 3);
  }
  const std::string a = random_expr(rng, depth - 1);
  const std::string b = random_expr(rng, depth - 1);
  switch (pick(rng)) {
    case 0: return "(" + a + ")+(" + b + ")";
    case 1: return "(" + a + ")-(" + b + ")";
    case 2: return "(" + a + ")*(" + b + ")";
    case 3: return "(" + a + ")/(3+sin(" + b + "))";
    case 4: return "sin(" + a + ")";
    case 5: return "cos(" + a + ")";
    case 6: return "exp(sin(" + a + "))";
    case 7: return "ln(2+cos(" + a + "))";
    case 8: return "sqrt(2+sin(" + a + "))^3";
    default: return "(" + a + ")^2";
  }
}

}  // namespace

TEST_CASE("parse and free variables") {
  auto g = Expr::parse("y^5+y^3+y+x^3");
  CHECK(g.free_variables() == std::set<std::string>{"x", "y"});
  CHECK(Expr::parse("x").root().kind == daeh::expr::NodeKind::Variable);
  CHECK(Expr::parse("abs(cos(t))/(2+sin(t))").free_variables() == std::set<std::string>{"t"});
}

TEST_CASE("evaluation") {
  CHECK(Expr::parse("y^5+y^3+y+x^3").eval({{"x", 1.0}, {"y", 1.0}}) == doctest::Approx(4.0));
  CHECK(Expr::parse("abs(cos(t))").eval({{"t", M_PI}}) == doctest::Approx(1.0));
  CHECK(Expr::parse("2+sin(t)").eval({{"t", M_PI / 2}}) == doctest::Approx(3.0));
  CHECK(Expr::parse("-2^2").eval({}) == doctest::Approx(-4.0));
  CHECK(Expr::parse("2^3^2").eval({}) == doctest::Approx(512.0));
  CHECK(Expr::parse("pi").eval({}) == doctest::Approx(M_PI));
  CHECK(Expr::parse("1.5e-3*2").eval({}) == doctest::Approx(3e-3));
}

TEST_CASE("dual numbers") {
  auto g = Expr::parse("y^5+y^3+y+x^3");
  auto d = g.eval_dual({{"x", 0.0}, {"y", 0.0}}, {"y"});
  CHECK(d.partials.size() == 1);
  CHECK(d.partials.at("y") == doctest::Approx(1.0));

  auto p = Expr::parse("x*y").eval_dual({{"x", 2.0}, {"y", 3.0}}, {"x", "y"});
  CHECK(p.partials.at("x") == doctest::Approx(3.0));
  CHECK(p.partials.at("y") == doctest::Approx(2.0));

  auto e = Expr::parse("exp(-x/y)");
  const double h = 1e-6;
  const double fd = (e.eval({{"x", 1 + h}, {"y", 1.0}}) - e.eval({{"x", 1 - h}, {"y", 1.0}})) / (2 * h);
  auto de = e.eval_dual({{"x", 1.0}, {"y", 1.0}}, {"x"});
  CHECK(de.partials.at("x") == doctest::Approx(fd).epsilon(1e-8));
  CHECK(de.partials.at("x") == doctest::Approx(-std::exp(-1.0)));

  CHECK(Expr::parse("abs(x)").eval_dual({{"x", 0.0}}, {"x"}).partials.at("x") == 0.0);
}

TEST_CASE("AD agrees with central differences on random expressions") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int checked = 0;
  for (int n = 0; n < 100; ++n) {
    auto e = Expr::parse(random_expr(rng, 3));
    Bindings b{{"x", u(rng)}, {"y", u(rng)}, {"z", u(rng)}};
    std::vector<std::string> seeds(e.free_variables().begin(), e.free_variables().end());
    auto d = e.eval_dual(b, seeds);
    CHECK(d.value == doctest::Approx(e.eval(b)));
    for (const auto& v : seeds) {
      const double h = 1e-5 * (1 + std::abs(b[v]));
      auto bp = b, bm = b;
      bp[v] += h;
      bm[v] -= h;
      const double fd = (e.eval(bp) - e.eval(bm)) / (2 * h);
      const double ad = d.partials.at(v);
      CHECK(std::abs(ad - fd) <= 1e-5 * (1 + std::abs(ad)));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("compiled program matches tree evaluation") {
  auto e = Expr::parse("x1*sin(x2) + x2^3 - exp(-x1/x2) + sqrt(x2)^1.5");
  auto prog = daeh::expr::Program::compile(e, [](std::string_view n) -> std::optional<std::size_t> {
    if (n == "x1") return 0;
    if (n == "x2") return 1;
    return std::nullopt;
  });
  std::vector<double> slots{0.7, 1.3};
  std::vector<std::size_t> seeds{0, 1};
  std::vector<double> grad(2);
  const double v = prog.eval_grad(slots, seeds, grad);
  auto d = e.eval_dual({{"x1", 0.7}, {"x2", 1.3}}, {"x1", "x2"});
  CHECK(v == doctest::Approx(d.value));
  CHECK(prog.eval(slots) == doctest::Approx(d.value));
  CHECK(grad[0] == doctest::Approx(d.partials.at("x1")));
  CHECK(grad[1] == doctest::Approx(d.partials.at("x2")));
}

TEST_CASE("print and reparse is idempotent") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 100; ++n) {
    auto e = Expr::parse(random_expr(rng, 4));
    auto once = Expr::parse(e.to_string());
    CHECK(once.structurally_equal(e));
    CHECK(Expr::parse(once.to_string()).to_string() == once.to_string());
  }
  for (const char* s : {"-x^2", "(-x)^2", "a-(b-c)", "a/(b*c)", "2^-1", "-(-x)", "x^y^z", "(x^y)^z"}) {
    auto e = Expr::parse(s);
    CHECK_MESSAGE(Expr::parse(e.to_string()).structurally_equal(e), s);
  }
}

TEST_CASE("symbolic derivative matches dual numbers") {
  auto e = Expr::parse("x^3*cos(y) + ln(x)/y");
  Bindings b{{"x", 1.7}, {"y", 0.4}};
  auto d = e.eval_dual(b, {"x", "y"});
  CHECK(e.derivative("x").eval(b) == doctest::Approx(d.partials.at("x")));
  CHECK(e.derivative("y").eval(b) == doctest::Approx(d.partials.at("y")));
}

TEST_CASE("substitution") {
  auto e = Expr::parse("x + 2*y");
  auto s = e.substitute({{"x", Expr::parse("y")}, {"y", Expr::parse("x")}});
  CHECK(s.eval({{"x", 1.0}, {"y", 10.0}}) == doctest::Approx(12.0));
}

TEST_CASE("errors") {
  CHECK(kind_of([] { Expr::parse(""); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { Expr::parse("1 +"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { Expr::parse("(x"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { Expr::parse("x y"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { Expr::parse("tan(x)"); }) == ErrorKind::UnknownFunction);
  CHECK(kind_of([] { Expr::parse("x+y").eval({{"x", 1.0}}); }) == ErrorKind::MissingBinding);
  CHECK(kind_of([] { Expr::parse("ln(x)").eval({{"x", 0.0}}); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { Expr::parse("sqrt(x)").eval({{"x", -1.0}}); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { Expr::parse("1/x").eval({{"x", 0.0}}); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { Expr::parse("x^0.5").eval({{"x", -1.0}}); }) == ErrorKind::DomainError);

  try {
    Expr::parse("1 + * 2");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
  }
}
