#pragma once

#include <functional>
#include <string>

#include <doctest.h>

#include "daeh/error.hpp"
#include "daeh/model.hpp"

namespace testing {

inline daeh::ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const daeh::Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return daeh::ErrorKind::Usage;
}

/// x' = a(t) f + lambda h, g = y - x (or the given g), k = s = 1, T = 1.
inline daeh::DaeProblem scalar_problem(const std::string& f, const std::string& h, const std::string& a = "1",
                                       const std::string& g = "y - x", double cap = 10.0) {
  daeh::ProblemSpec spec;
  spec.name = "test";
  spec.k = 1;
  spec.s = 1;
  spec.f = {daeh::expr::Expr::parse(f)};
  spec.g = {daeh::expr::Expr::parse(g)};
  spec.h = {daeh::expr::Expr::parse(h)};
  spec.a = daeh::expr::Expr::parse(a);
  spec.period = 1.0;
  spec.domain.bounds = {daeh::Interval{}, daeh::Interval{}};
  spec.cap_half_width = cap;
  return daeh::DaeProblem::create(std::move(spec));
}

}  // namespace testing
