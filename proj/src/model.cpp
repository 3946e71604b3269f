#include "daeh/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "daeh/error.hpp"
#include "daeh/numerics.hpp"

namespace daeh {

using expr::Expr;

// ------------------------------------------------------------------ Box

bool Box::contains(std::span<const double> z) const {
  if (z.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!bounds[i].contains(z[i])) return false;
  }
  return true;
}

bool Box::bounded() const {
  return std::all_of(bounds.begin(), bounds.end(), [](const Interval& i) { return i.bounded(); });
}

Box Box::capped(double half_width) const {
  Box out = *this;
  for (auto& iv : out.bounds) {
    iv.lo = std::max(iv.lo, -half_width);
    iv.hi = std::min(iv.hi, half_width);
  }
  return out;
}

bool Box::empty() const {
  return std::any_of(bounds.begin(), bounds.end(), [](const Interval& i) { return !(i.lo < i.hi); });
}

Vector Box::center() const {
  Vector c(bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) c[i] = 0.5 * (bounds[i].lo + bounds[i].hi);
  return c;
}

Vector PointKS::joined() const {
  Vector z = p;
  z.insert(z.end(), q.begin(), q.end());
  return z;
}

PointKS PointKS::split(std::span<const double> z, std::size_t k) {
  return {Vector(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k)),
          Vector(z.begin() + static_cast<std::ptrdiff_t>(k), z.end())};
}

std::string state_variable_name(std::size_t i, std::size_t k) {
  return i < k ? "x" + std::to_string(i + 1) : "y" + std::to_string(i - k + 1);
}

// ------------------------------------------------------------ DaeProblem

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorKind::InvalidProblem, what); }

void check_variables(const Expr& e, const std::string& label, std::size_t k, std::size_t s, bool allow_state,
                     bool allow_t) {
  for (const auto& v : e.free_variables()) {
    bool ok = false;
    if (allow_t && v == "t") ok = true;
    if (allow_state) {
      if ((v == "x" && k == 1) || (v == "y" && s == 1)) ok = true;
      for (std::size_t i = 0; i < k + s; ++i) {
        if (v == state_variable_name(i, k)) ok = true;
      }
    }
    if (!ok) invalid(label + " uses unknown variable '" + v + "'");
  }
}

}  // namespace

void DaeProblem::compile() {
  const std::size_t k = spec_.k;
  const std::size_t s = spec_.s;
  const std::size_t n = k + s;
  auto resolver = [k, s, n](std::string_view name) -> std::optional<std::size_t> {
    if (name == "t") return n;
    if (name == "x" && k == 1) return 0;
    if (name == "y" && s == 1) return k;
    for (std::size_t i = 0; i < n; ++i) {
      if (name == state_variable_name(i, k)) return i;
    }
    return std::nullopt;
  };
  f_.clear();
  g_.clear();
  h_.clear();
  for (const auto& e : spec_.f) f_.push_back(expr::Program::compile(e, resolver));
  for (const auto& e : spec_.g) g_.push_back(expr::Program::compile(e, resolver));
  for (const auto& e : spec_.h) h_.push_back(expr::Program::compile(e, resolver));
  a_ = expr::Program::compile(spec_.a, resolver);
  state_slots_.resize(n);
  for (std::size_t i = 0; i < n; ++i) state_slots_[i] = i;
}

DaeProblem DaeProblem::create(ProblemSpec spec) {
  const std::size_t k = spec.k;
  const std::size_t s = spec.s;
  if (k == 0 || s == 0) invalid("dimensions k and s must be positive");
  if (spec.f.size() != k) invalid("expected " + std::to_string(k) + " components of f");
  if (spec.g.size() != s) invalid("expected " + std::to_string(s) + " components of g");
  if (spec.h.empty()) spec.h.assign(k, Expr::constant(0.0));
  if (spec.h.size() != k) invalid("expected " + std::to_string(k) + " components of h");
  if (!(spec.period > 0.0) || !std::isfinite(spec.period)) invalid("period must be positive");
  if (spec.domain.bounds.empty()) spec.domain.bounds.assign(k + s, Interval{});
  if (spec.domain.dim() != k + s) invalid("domain must have k+s intervals");
  if (!(spec.cap_half_width > 0.0)) invalid("cap half-width must be positive");
  for (std::size_t i = 0; i < k; ++i) check_variables(spec.f[i], "f" + std::to_string(i + 1), k, s, true, false);
  for (std::size_t i = 0; i < s; ++i) check_variables(spec.g[i], "g" + std::to_string(i + 1), k, s, true, false);
  for (std::size_t i = 0; i < k; ++i) check_variables(spec.h[i], "h" + std::to_string(i + 1), k, s, true, true);
  check_variables(spec.a, "a", k, s, false, true);

  DaeProblem p;
  p.spec_ = std::move(spec);
  p.box_ = p.spec_.domain.capped(p.spec_.cap_half_width);
  if (p.box_.empty()) invalid("capped domain is empty");
  p.compile();

  const double T = p.spec_.period;
  constexpr int kSamples = 64;
  for (int j = 0; j < kSamples; ++j) {
    const double t = T * (j + 0.37) / kSamples;
    if (std::abs(p.eval_a(t) - p.eval_a(t + T)) > 1e-9) {
      invalid("a is not T-periodic (t = " + std::to_string(t) + ")");
    }
  }
  // h periodicity on a few state points inside the box
  std::vector<Vector> probes;
  probes.push_back(p.box_.center());
  for (double frac : {0.23, 0.71}) {
    Vector z(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) {
      const auto& iv = p.box_.bounds[i];
      z[i] = iv.lo + frac * (iv.hi - iv.lo);
    }
    probes.push_back(z);
  }
  for (const auto& z : probes) {
    for (int j = 0; j < kSamples; ++j) {
      const double t = T * (j + 0.37) / kSamples;
      Vector h0, h1;
      try {
        h0 = p.eval_h(t, z);
        h1 = p.eval_h(t + T, z);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::DomainError) break;
        throw;
      }
      for (std::size_t i = 0; i < h0.size(); ++i) {
        if (std::abs(h0[i] - h1[i]) > 1e-9) invalid("h is not T-periodic in t");
      }
    }
  }
  auto quad = numerics::gauss_kronrod([&p](double t) { return p.eval_a(t); }, 0.0, T, 1e-12);
  p.a_mean_ = quad.value / T;
  if (std::abs(p.a_mean_) <= 1e-12) invalid("the mean of a over one period must be nonzero");
  return p;
}

DaeProblem DaeProblem::with_unit_drift() const {
  ProblemSpec s = spec_;
  s.a = Expr::constant(1.0);
  s.name += "/unit-drift";
  DaeProblem p;
  p.spec_ = std::move(s);
  p.box_ = box_;
  p.a_mean_ = 1.0;
  p.compile();
  return p;
}

double DaeProblem::eval_a(double t) const {
  double slots[64];
  const std::size_t n = this->n();
  std::vector<double> big;
  std::span<double> z;
  if (n + 1 <= 64) {
    z = std::span<double>(slots, n + 1);
  } else {
    big.assign(n + 1, 0.0);
    z = big;
  }
  std::fill(z.begin(), z.end(), 0.0);
  z[n] = t;
  return a_.eval(z);
}

namespace {

Vector with_time(std::span<const double> z, double t) {
  Vector slots(z.begin(), z.end());
  slots.push_back(t);
  return slots;
}

}  // namespace

Vector DaeProblem::eval_f(std::span<const double> z) const {
  Vector slots = with_time(z, 0.0);
  Vector out(k());
  for (std::size_t i = 0; i < k(); ++i) out[i] = f_[i].eval(slots);
  return out;
}

Vector DaeProblem::eval_g(std::span<const double> z) const {
  Vector slots = with_time(z, 0.0);
  Vector out(s());
  for (std::size_t i = 0; i < s(); ++i) out[i] = g_[i].eval(slots);
  return out;
}

Vector DaeProblem::eval_h(double t, std::span<const double> z) const {
  Vector slots = with_time(z, t);
  Vector out(k());
  for (std::size_t i = 0; i < k(); ++i) out[i] = h_[i].eval(slots);
  return out;
}

Vector DaeProblem::eval_F(std::span<const double> z) const {
  Vector out = eval_f(z);
  Vector g = eval_g(z);
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

Matrix DaeProblem::jac_F(std::span<const double> z) const {
  const std::size_t n = this->n();
  Vector slots = with_time(z, 0.0);
  Matrix j(n, n);
  Vector grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prog = i < k() ? f_[i] : g_[i - k()];
    prog.eval_grad(slots, state_slots_, grad);
    for (std::size_t c = 0; c < n; ++c) j(i, c) = grad[c];
  }
  return j;
}

JacobianBlocks DaeProblem::blocks(std::span<const double> z) const {
  Matrix j = jac_F(z);
  const std::size_t k = this->k(), s = this->s();
  return {j.block(0, 0, k, k), j.block(0, k, k, s), j.block(k, 0, s, k), j.block(k, k, s, s)};
}

Matrix DaeProblem::d2g(std::span<const double> z) const {
  const std::size_t k = this->k(), s = this->s();
  Vector slots = with_time(z, 0.0);
  std::vector<std::size_t> seeds(s);
  for (std::size_t i = 0; i < s; ++i) seeds[i] = k + i;
  Matrix m(s, s);
  Vector grad(s);
  for (std::size_t i = 0; i < s; ++i) {
    g_[i].eval_grad(slots, seeds, grad);
    for (std::size_t c = 0; c < s; ++c) m(i, c) = grad[c];
  }
  return m;
}

void DaeProblem::eval_field_parts(double t, std::span<const double> z, std::span<double> f,
                                  std::span<double> h, Matrix& dg) const {
  const std::size_t n = this->n();
  thread_local Vector slots;
  thread_local Vector grad;
  slots.assign(z.begin(), z.end());
  slots.push_back(t);
  grad.resize(n);
  for (std::size_t i = 0; i < k(); ++i) {
    f[i] = f_[i].eval(slots);
    h[i] = h_[i].eval(slots);
  }
  if (dg.rows() != s() || dg.cols() != n) dg = Matrix(s(), n);
  for (std::size_t i = 0; i < s(); ++i) {
    g_[i].eval_grad(slots, state_slots_, grad);
    for (std::size_t c = 0; c < n; ++c) dg(i, c) = grad[c];
  }
}

// ------------------------------------------------------ moving constraint

DaeProblem transform_theta_b(const MovingConstraintProblem& raw) {
  const double T = raw.period;
  if (!(T > 0.0)) invalid("period must be positive");
  const expr::Bindings none;
  auto b_at = [&raw](double t) { return raw.b.eval({{"t", t}}); };
  for (int j = 0; j < 64; ++j) {
    const double t = T * (j + 0.37) / 64.0;
    const double bt = b_at(t);
    if (!(bt > 0.0)) invalid("b must be strictly positive on [0,T] (t = " + std::to_string(t) + ")");
    if (std::abs(bt - b_at(t + T)) > 1e-9) invalid("b is not T-periodic");
  }
  for (const auto& v : raw.b.free_variables()) {
    if (v != "t") invalid("b may depend on t only");
  }

  const Expr b = raw.b;
  const Expr b_dot = raw.b.derivative("t");

  ProblemSpec spec;
  spec.name = raw.name;
  spec.k = raw.k;
  spec.s = raw.s;
  spec.g = raw.g;
  spec.a = (b_dot + raw.a) / b;
  for (std::size_t i = 0; i < raw.k; ++i) {
    spec.f.push_back(Expr::variable(raw.k == 1 ? "x" : "x" + std::to_string(i + 1)));
  }
  std::map<std::string, Expr, std::less<>> scale;
  for (std::size_t i = 0; i < raw.k; ++i) {
    const std::string xi = "x" + std::to_string(i + 1);
    scale[xi] = Expr::variable(xi) / b;
    if (raw.k == 1) scale["x"] = Expr::variable("x") / b;
  }
  for (const auto& h : raw.h) spec.h.push_back(b * h.substitute(scale));
  spec.period = T;
  spec.domain = raw.domain;
  spec.cap_half_width = raw.cap_half_width;

  DaeProblem p = DaeProblem::create(std::move(spec));
  // mean((b' + a)/b) = mean(a/b) since b'/b integrates to ln b(T) - ln b(0) = 0
  auto quad = numerics::gauss_kronrod(
      [&](double t) { return raw.a.eval({{"t", t}}) / b_at(t); }, 0.0, T, 1e-12);
  const double raw_mean = quad.value / T;
  if (std::abs(raw_mean - p.a_mean()) > 1e-8) {
    invalid("transformed drift mean " + std::to_string(p.a_mean()) + " differs from mean(a/b) " +
            std::to_string(raw_mean));
  }
  return p;
}

PointKS pullback_theta_b(const MovingConstraintProblem& raw, double t, const PointKS& transformed) {
  const double bt = raw.b.eval({{"t", t}});
  PointKS out = transformed;
  for (double& v : out.p) v /= bt;
  return out;
}

MovingConstraintProblem example_3_7_raw() {
  MovingConstraintProblem raw;
  raw.name = "example-3-7";
  raw.k = 1;
  raw.s = 1;
  raw.a = Expr::parse("abs(cos(t))");
  raw.b = Expr::parse("2+sin(t)");
  raw.g = {Expr::parse("y^5+y^3+y+x^3")};
  raw.h = {Expr::parse("cos(t)")};
  raw.period = 2.0 * std::numbers::pi;
  raw.domain.bounds = {Interval{-1.0, std::numeric_limits<double>::infinity()}, Interval{}};
  raw.cap_half_width = 10.0;
  return raw;
}

namespace {

DaeProblem make_reactor() {
  const ReactorConstants c;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  ProblemSpec spec;
  spec.name = "reactor";
  spec.k = 2;
  spec.s = 1;
  spec.f = {Expr::parse(num(c.k1) + "*(" + num(c.c0) + "-x1) - y"),
            Expr::parse(num(c.k1) + "*(" + num(c.temp0) + "-x2) + " + num(c.k2) + "*y - " + num(c.k3) + "*(x2-" +
                        num(c.temp_c) + ")")};
  spec.g = {Expr::parse("y - " + num(c.k3) + "*exp(-" + num(c.k4) + "*x1/x2)")};
  spec.h = {Expr::parse("cos(2*pi*t)"), Expr::parse("cos(2*pi*t)")};
  spec.a = Expr::parse("1 + 0.5*sin(2*pi*t)");
  spec.period = 1.0;
  spec.domain.bounds = {Interval{}, Interval{0.0, std::numeric_limits<double>::infinity()}, Interval{}};
  return DaeProblem::create(std::move(spec));
}

DaeProblem make_example_4_6() {
  ProblemSpec spec;
  spec.name = "example-4-6";
  spec.k = 1;
  spec.s = 1;
  spec.f = {Expr::parse("x*y^2 - x^2*y")};
  spec.g = {Expr::parse("y - x^3 + 0.5*y^3")};
  spec.h = {Expr::parse("cos(2*pi*t)")};
  spec.a = Expr::parse("1 + 0.5*sin(2*pi*t)");
  spec.period = 1.0;
  spec.domain.bounds = {Interval{-1.5, 10.0}, Interval{-1.5, 10.0}};
  return DaeProblem::create(std::move(spec));
}

}  // namespace

std::vector<std::string> builtin_names() { return {"example-3-7", "reactor", "example-4-6"}; }

DaeProblem builtin(const std::string& name) {
  if (name == "example-3-7") return transform_theta_b(example_3_7_raw());
  if (name == "reactor") return make_reactor();
  if (name == "example-4-6") return make_example_4_6();
  fail(ErrorKind::UnknownBuiltin, "unknown builtin problem '" + name + "'");
}

// ---------------------------------------------------------- problem files

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_bound(const std::string& text, int line_no) {
  std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    return Expr::parse(t).eval({});
  } catch (const Error&) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad bound '" + t + "'");
  }
}

std::size_t index_suffix(const std::string& key, char prefix, int line_no) {
  if (key.size() < 2 || key[0] != prefix) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unexpected key '" + key + "'");
  }
  try {
    std::size_t pos = 0;
    const auto v = std::stoul(key.substr(1), &pos);
    if (pos != key.size() - 1 || v == 0) throw std::invalid_argument(key);
    return v - 1;
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad index in key '" + key + "'");
  }
}

}  // namespace

ProblemSpec parse_problem_text(const std::string& text, const std::string& name) {
  ProblemSpec spec;
  spec.name = name;
  std::map<std::string, Expr, std::less<>> params;
  std::map<std::size_t, std::string> f_src, g_src, h_src;
  std::map<std::string, std::pair<std::string, int>> domain_src;
  std::string a_src;
  bool have_period = false;
  std::string section;
  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  auto parse_expr = [&](const std::string& src, int ln) {
    try {
      return Expr::parse(src).substitute(params);
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(ln) + ": " + e.what());
    }
  };
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = trim(raw_line.substr(0, raw_line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"dims", "params", "f", "g", "h", "a", "domain", "period"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": entry outside a section");
    if (section == "dims") {
      const double v = parse_expr(value, line_no).eval({});
      if (v < 1 || std::floor(v) != v) fail(ErrorKind::InvalidProblem, "line " + std::to_string(line_no) + ": bad dimension");
      if (key == "k") spec.k = static_cast<std::size_t>(v);
      else if (key == "s") spec.s = static_cast<std::size_t>(v);
      else fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + key + "' in [dims]");
    } else if (section == "params") {
      params[key] = Expr::constant(parse_expr(value, line_no).eval({}));
    } else if (section == "f") {
      f_src[index_suffix(key, 'f', line_no)] = value;
    } else if (section == "g") {
      g_src[index_suffix(key, 'g', line_no)] = value;
    } else if (section == "h") {
      h_src[index_suffix(key, 'h', line_no)] = value;
    } else if (section == "a") {
      a_src = value;
    } else if (section == "period") {
      spec.period = parse_expr(value, line_no).eval({});
      have_period = true;
    } else if (section == "domain") {
      domain_src[key] = {value, line_no};
    }
  }
  if (spec.k == 0 || spec.s == 0) fail(ErrorKind::InvalidProblem, "[dims] must define k and s");
  if (!have_period) fail(ErrorKind::InvalidProblem, "missing [period]");
  if (a_src.empty()) fail(ErrorKind::InvalidProblem, "missing [a]");
  auto collect = [&](const std::map<std::size_t, std::string>& src, std::size_t count, const char* label,
                     bool optional) {
    std::vector<Expr> out;
    if (src.empty() && optional) return out;
    for (std::size_t i = 0; i < count; ++i) {
      auto it = src.find(i);
      if (it == src.end()) {
        fail(ErrorKind::InvalidProblem, std::string("missing ") + label + std::to_string(i + 1));
      }
      out.push_back(parse_expr(it->second, 0));
    }
    if (src.size() != count) fail(ErrorKind::InvalidProblem, std::string("too many components of ") + label);
    return out;
  };
  spec.f = collect(f_src, spec.k, "f", false);
  spec.g = collect(g_src, spec.s, "g", false);
  spec.h = collect(h_src, spec.k, "h", true);
  spec.a = parse_expr(a_src, 0);
  spec.domain.bounds.assign(spec.k + spec.s, Interval{});
  for (const auto& [key, entry] : domain_src) {
    const auto& [value, ln] = entry;
    if (key == "cap") {
      spec.cap_half_width = parse_bound(value, ln);
      continue;
    }
    std::optional<std::size_t> idx;
    for (std::size_t i = 0; i < spec.k + spec.s; ++i) {
      if (key == state_variable_name(i, spec.k)) idx = i;
    }
    if (key == "x" && spec.k == 1) idx = 0;
    if (key == "y" && spec.s == 1) idx = spec.k;
    if (!idx) fail(ErrorKind::ParseError, "line " + std::to_string(ln) + ": unknown domain variable '" + key + "'");
    const auto comma = value.find(',');
    if (comma == std::string::npos) fail(ErrorKind::ParseError, "line " + std::to_string(ln) + ": expected 'lo, hi'");
    spec.domain.bounds[*idx] = Interval{parse_bound(value.substr(0, comma), ln), parse_bound(value.substr(comma + 1), ln)};
  }
  return spec;
}

DaeProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Usage, "cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  return DaeProblem::create(parse_problem_text(ss.str(), name));
}

}  // namespace daeh
