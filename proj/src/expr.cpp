#include "daeh/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "daeh/error.hpp"

namespace daeh::expr {

namespace {

using NodePtr = std::shared_ptr<const Node>;

std::string at(std::size_t offset) { return " at offset " + std::to_string(offset); }

[[noreturn]] void domain_error(const char* what, std::size_t offset) {
  fail(ErrorKind::DomainError, std::string("domain error: ") + what + at(offset));
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->offset = offset;
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr arg, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(arg);
  n->offset = offset;
  return n;
}

NodePtr make_constant(double v, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = v;
  n->offset = offset;
  return n;
}

NodePtr make_variable(std::string name, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->name = std::move(name);
  n->offset = offset;
  return n;
}

NodePtr make_call(Function fn, NodePtr arg, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->fn = fn;
  n->lhs = std::move(arg);
  n->offset = offset;
  return n;
}

// Exponent value when the exponent is a literal (possibly negated).
std::optional<double> literal_exponent(const Node& e) {
  if (e.kind == NodeKind::Constant) return e.value;
  if (e.kind == NodeKind::Negate && e.lhs->kind == NodeKind::Constant) return -e.lhs->value;
  return std::nullopt;
}

std::optional<int> integer_exponent(const Node& e) {
  auto v = literal_exponent(e);
  if (!v || std::floor(*v) != *v || std::abs(*v) > 1024) return std::nullopt;
  return static_cast<int>(*v);
}

void collect_free(const Node& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::Variable) out.insert(n.name);
  if (n.lhs) collect_free(*n.lhs, out);
  if (n.rhs) collect_free(*n.rhs, out);
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) syntax("expression");
    auto e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) syntax("operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void syntax(const std::string& expected) const {
    std::string found = pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input";
    fail(ErrorKind::ParseError,
         "syntax error" + at(pos_) + ": expected " + expected + ", found " + found);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      skip_ws();
      std::size_t op_at = pos_;
      if (accept('+')) {
        lhs = make_binary(NodeKind::Add, lhs, parse_product(), op_at);
      } else if (accept('-')) {
        lhs = make_binary(NodeKind::Sub, lhs, parse_product(), op_at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      skip_ws();
      std::size_t op_at = pos_;
      if (accept('*')) {
        lhs = make_binary(NodeKind::Mul, lhs, parse_unary(), op_at);
      } else if (accept('/')) {
        lhs = make_binary(NodeKind::Div, lhs, parse_unary(), op_at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    skip_ws();
    std::size_t op_at = pos_;
    if (accept('-')) return make_unary(NodeKind::Negate, parse_unary(), op_at);
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    skip_ws();
    std::size_t op_at = pos_;
    if (accept('^')) return make_binary(NodeKind::Pow, base, parse_unary(), op_at);
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) syntax("number, identifier or '('");
    const std::size_t start = pos_;
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_sum();
      if (!accept(')')) syntax("')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      std::string ident(src_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        auto fn = function_from_name(ident);
        if (!fn) {
          fail(ErrorKind::UnknownFunction, "unknown function '" + ident + "'" + at(start));
        }
        ++pos_;
        auto arg = parse_sum();
        if (!accept(')')) syntax("')'");
        return make_call(*fn, arg, start);
      }
      if (ident == "pi") return make_constant(std::numbers::pi, start);
      return make_variable(std::move(ident), start);
    }
    syntax("number, identifier or '('");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) syntax("digits");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) syntax("exponent digits");
    }
    double v = 0.0;
    auto text = src_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      pos_ = start;
      syntax("number");
    }
    return make_constant(v, start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- printer

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Negate: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Constant: return n.value < 0 ? 0 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "(1/0)" : "(-1/0)";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0) return "(" + s + ")";
  return s;
}

void print(const Node& n, std::string& out) {
  auto child = [&](const Node& c, bool parens) {
    if (parens) out += '(';
    print(c, out);
    if (parens) out += ')';
  };
  const int p = precedence(n);
  switch (n.kind) {
    case NodeKind::Constant:
      out += format_number(n.value);
      return;
    case NodeKind::Variable:
      out += n.name;
      return;
    case NodeKind::Negate:
      out += '-';
      child(*n.lhs, precedence(*n.lhs) < p);
      return;
    case NodeKind::Call:
      out += function_name(n.fn);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Pow:
      child(*n.lhs, precedence(*n.lhs) <= p);
      out += '^';
      child(*n.rhs, precedence(*n.rhs) < p);
      return;
    default: {
      static constexpr std::string_view ops = "+-*/";
      const int idx = static_cast<int>(n.kind) - static_cast<int>(NodeKind::Add);
      child(*n.lhs, precedence(*n.lhs) < p);
      out += ops[static_cast<std::size_t>(idx)];
      child(*n.rhs, precedence(*n.rhs) <= p);
      return;
    }
  }
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Constant: return a.value == b.value;
    case NodeKind::Variable: return a.name == b.name;
    case NodeKind::Call: return a.fn == b.fn && equal(*a.lhs, *b.lhs);
    case NodeKind::Negate: return equal(*a.lhs, *b.lhs);
    default: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

// ------------------------------------------------------------- evaluation

// Forward-mode number with a fixed number of partials.
struct Dual {
  double v = 0.0;
  std::vector<double> d;
};

double checked_pow_int(double base, int n, std::size_t offset) {
  if (n < 0 && base == 0.0) domain_error("zero raised to a negative power", offset);
  double r = 1.0;
  double b = n < 0 ? 1.0 / base : base;
  for (int i = 0, m = n < 0 ? -n : n; i < m; ++i) r *= b;
  return r;
}

Dual eval_tree(const Node& n, const Bindings& env, const std::vector<std::string>& seeds) {
  const std::size_t m = seeds.size();
  Dual out;
  out.d.assign(m, 0.0);
  switch (n.kind) {
    case NodeKind::Constant:
      out.v = n.value;
      return out;
    case NodeKind::Variable: {
      auto it = env.find(n.name);
      if (it == env.end()) {
        fail(ErrorKind::MissingBinding, "no binding for variable '" + n.name + "'" + at(n.offset));
      }
      out.v = it->second;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = seeds[i] == n.name ? 1.0 : 0.0;
      return out;
    }
    case NodeKind::Negate: {
      auto a = eval_tree(*n.lhs, env, seeds);
      out.v = -a.v;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = -a.d[i];
      return out;
    }
    case NodeKind::Call: {
      auto a = eval_tree(*n.lhs, env, seeds);
      double dv = 0.0;
      switch (n.fn) {
        case Function::Sin: out.v = std::sin(a.v); dv = std::cos(a.v); break;
        case Function::Cos: out.v = std::cos(a.v); dv = -std::sin(a.v); break;
        case Function::Exp: out.v = std::exp(a.v); dv = out.v; break;
        case Function::Ln:
          if (a.v <= 0.0) domain_error("ln of nonpositive argument", n.offset);
          out.v = std::log(a.v);
          dv = 1.0 / a.v;
          break;
        case Function::Abs:
          out.v = std::abs(a.v);
          dv = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
          break;
        case Function::Sqrt:
          if (a.v < 0.0) domain_error("sqrt of negative argument", n.offset);
          out.v = std::sqrt(a.v);
          if (m > 0 && out.v == 0.0) domain_error("sqrt not differentiable at 0", n.offset);
          dv = m > 0 ? 0.5 / out.v : 0.0;
          break;
      }
      for (std::size_t i = 0; i < m; ++i) out.d[i] = dv * a.d[i];
      return out;
    }
    case NodeKind::Pow: {
      auto a = eval_tree(*n.lhs, env, seeds);
      if (auto ni = integer_exponent(*n.rhs)) {
        out.v = checked_pow_int(a.v, *ni, n.offset);
        const double dv = *ni == 0 ? 0.0 : *ni * checked_pow_int(a.v, *ni - 1, n.offset);
        for (std::size_t i = 0; i < m; ++i) out.d[i] = dv * a.d[i];
        return out;
      }
      auto b = eval_tree(*n.rhs, env, seeds);
      if (a.v <= 0.0) domain_error("non-integer power of nonpositive base", n.offset);
      out.v = std::pow(a.v, b.v);
      const double la = std::log(a.v);
      for (std::size_t i = 0; i < m; ++i) {
        out.d[i] = out.v * (b.d[i] * la + b.v * a.d[i] / a.v);
      }
      return out;
    }
    default:
      break;
  }
  auto a = eval_tree(*n.lhs, env, seeds);
  auto b = eval_tree(*n.rhs, env, seeds);
  switch (n.kind) {
    case NodeKind::Add:
      out.v = a.v + b.v;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = a.d[i] + b.d[i];
      break;
    case NodeKind::Sub:
      out.v = a.v - b.v;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = a.d[i] - b.d[i];
      break;
    case NodeKind::Mul:
      out.v = a.v * b.v;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = a.d[i] * b.v + a.v * b.d[i];
      break;
    case NodeKind::Div:
      if (b.v == 0.0) domain_error("division by zero", n.offset);
      out.v = a.v / b.v;
      for (std::size_t i = 0; i < m; ++i) out.d[i] = (a.d[i] - out.v * b.d[i]) / b.v;
      break;
    default:
      break;
  }
  return out;
}

NodePtr substitute_node(const NodePtr& n, const std::map<std::string, Expr, std::less<>>& rep) {
  if (n->kind == NodeKind::Variable) {
    auto it = rep.find(n->name);
    if (it != rep.end()) return std::make_shared<Node>(it->second.root());
    return n;
  }
  if (!n->lhs) return n;
  auto copy = std::make_shared<Node>(*n);
  copy->lhs = substitute_node(n->lhs, rep);
  if (n->rhs) copy->rhs = substitute_node(n->rhs, rep);
  return copy;
}

}  // namespace

// ---------------------------------------------------------------- Expr

std::string_view function_name(Function fn) {
  switch (fn) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Exp: return "exp";
    case Function::Ln: return "ln";
    case Function::Abs: return "abs";
    case Function::Sqrt: return "sqrt";
  }
  return "?";
}

std::optional<Function> function_from_name(std::string_view name) {
  for (auto fn : {Function::Sin, Function::Cos, Function::Exp, Function::Ln, Function::Abs,
                  Function::Sqrt}) {
    if (function_name(fn) == name) return fn;
  }
  return std::nullopt;
}

Expr::Expr() : Expr(make_constant(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {
  auto vars = std::make_shared<std::set<std::string>>();
  collect_free(*root_, *vars);
  free_ = std::move(vars);
}

Expr Expr::parse(std::string_view source) {
  return Expr(Parser(source).parse());
}

Expr Expr::constant(double value) { return Expr(make_constant(value)); }
Expr Expr::variable(std::string name) { return Expr(make_variable(std::move(name))); }
Expr Expr::call(Function fn, const Expr& arg) { return Expr(make_call(fn, arg.root_)); }
Expr Expr::pow(const Expr& base, const Expr& exponent) {
  return Expr(make_binary(NodeKind::Pow, base.root_, exponent.root_, 0));
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Add, a.root_, b.root_, 0));
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Sub, a.root_, b.root_, 0));
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Mul, a.root_, b.root_, 0));
}
Expr operator/(const Expr& a, const Expr& b) {
  return Expr(make_binary(NodeKind::Div, a.root_, b.root_, 0));
}
Expr operator-(const Expr& a) { return Expr(make_unary(NodeKind::Negate, a.root_, 0)); }

double Expr::eval(const Bindings& bindings) const {
  return eval_tree(*root_, bindings, {}).v;
}

DualValue Expr::eval_dual(const Bindings& bindings, const std::vector<std::string>& seeds) const {
  auto d = eval_tree(*root_, bindings, seeds);
  DualValue out;
  out.value = d.v;
  for (std::size_t i = 0; i < seeds.size(); ++i) out.partials[seeds[i]] = d.d[i];
  return out;
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool Expr::structurally_equal(const Expr& other) const { return equal(*root_, *other.root_); }

Expr Expr::substitute(const std::map<std::string, Expr, std::less<>>& replacement) const {
  return Expr(substitute_node(root_, replacement));
}

Expr Expr::derivative(std::string_view var) const {
  const Node& n = *root_;
  auto sub = [](const NodePtr& p) { return Expr(p); };
  switch (n.kind) {
    case NodeKind::Constant: return constant(0.0);
    case NodeKind::Variable: return constant(n.name == var ? 1.0 : 0.0);
    case NodeKind::Negate: return -sub(n.lhs).derivative(var);
    case NodeKind::Add: return sub(n.lhs).derivative(var) + sub(n.rhs).derivative(var);
    case NodeKind::Sub: return sub(n.lhs).derivative(var) - sub(n.rhs).derivative(var);
    case NodeKind::Mul: {
      Expr u = sub(n.lhs), v = sub(n.rhs);
      return u.derivative(var) * v + u * v.derivative(var);
    }
    case NodeKind::Div: {
      Expr u = sub(n.lhs), v = sub(n.rhs);
      return (u.derivative(var) * v - u * v.derivative(var)) / (v * v);
    }
    case NodeKind::Pow: {
      Expr u = sub(n.lhs), v = sub(n.rhs);
      if (auto c = literal_exponent(*n.rhs)) {
        return constant(*c) * pow(u, constant(*c - 1.0)) * u.derivative(var);
      }
      return *this * (v.derivative(var) * call(Function::Ln, u) + v * u.derivative(var) / u);
    }
    case NodeKind::Call: {
      Expr u = sub(n.lhs);
      Expr du = u.derivative(var);
      switch (n.fn) {
        case Function::Sin: return call(Function::Cos, u) * du;
        case Function::Cos: return -call(Function::Sin, u) * du;
        case Function::Exp: return *this * du;
        case Function::Ln: return du / u;
        case Function::Abs: return u / *this * du;
        case Function::Sqrt: return du / (constant(2.0) * *this);
      }
    }
  }
  return constant(0.0);
}

// ---------------------------------------------------------------- Program

void Program::emit(const Node& n, const SlotResolver& slot_of) {
  Instr ins{};
  ins.offset = n.offset;
  switch (n.kind) {
    case NodeKind::Constant:
      ins.op = Op::Const;
      ins.value = n.value;
      break;
    case NodeKind::Variable: {
      auto slot = slot_of(n.name);
      if (!slot) {
        fail(ErrorKind::MissingBinding, "no binding for variable '" + n.name + "'" + at(n.offset));
      }
      ins.op = Op::Slot;
      ins.slot = *slot;
      break;
    }
    case NodeKind::Negate:
      emit(*n.lhs, slot_of);
      ins.op = Op::Neg;
      break;
    case NodeKind::Call:
      emit(*n.lhs, slot_of);
      ins.op = static_cast<Op>(static_cast<int>(Op::Sin) + static_cast<int>(n.fn));
      break;
    case NodeKind::Pow:
      emit(*n.lhs, slot_of);
      if (auto ni = integer_exponent(*n.rhs)) {
        ins.op = Op::PowInt;
        ins.ipow = *ni;
      } else if (auto c = literal_exponent(*n.rhs)) {
        ins.op = Op::PowConst;
        ins.value = *c;
      } else {
        emit(*n.rhs, slot_of);
        ins.op = Op::PowReal;
      }
      break;
    default:
      emit(*n.lhs, slot_of);
      emit(*n.rhs, slot_of);
      ins.op = static_cast<Op>(static_cast<int>(Op::Add) + static_cast<int>(n.kind) -
                               static_cast<int>(NodeKind::Add));
      break;
  }
  code_.push_back(ins);
}

Program Program::compile(const Expr& e, const SlotResolver& slot_of) {
  Program p;
  p.emit(e.root(), slot_of);
  std::size_t depth = 0;
  for (const auto& ins : p.code_) {
    switch (ins.op) {
      case Op::Const:
      case Op::Slot: ++depth; break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::PowReal: --depth; break;
      default: break;
    }
    p.max_depth_ = std::max(p.max_depth_, depth);
  }
  return p;
}

double Program::eval(std::span<const double> slots) const {
  std::span<const std::size_t> none;
  std::span<double> no_grad;
  return eval_grad(slots, none, no_grad);
}

double Program::eval_grad(std::span<const double> slots, std::span<const std::size_t> seed_slots,
                          std::span<double> grad) const {
  const std::size_t m = seed_slots.size();
  const std::size_t width = m + 1;
  thread_local std::vector<double> stack;
  if (stack.size() < max_depth_ * width) stack.resize(max_depth_ * width);
  double* base = stack.data();
  std::size_t sp = 0;  // number of entries

  auto top = [&](std::size_t back) { return base + (sp - 1 - back) * width; };

  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Const: {
        double* e = base + sp * width;
        e[0] = ins.value;
        for (std::size_t i = 1; i < width; ++i) e[i] = 0.0;
        ++sp;
        break;
      }
      case Op::Slot: {
        double* e = base + sp * width;
        e[0] = slots[ins.slot];
        for (std::size_t i = 0; i < m; ++i) e[i + 1] = seed_slots[i] == ins.slot ? 1.0 : 0.0;
        ++sp;
        break;
      }
      case Op::Neg: {
        double* e = top(0);
        for (std::size_t i = 0; i < width; ++i) e[i] = -e[i];
        break;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        double* a = top(1);
        const double* b = top(0);
        if (ins.op == Op::Add) {
          for (std::size_t i = 0; i < width; ++i) a[i] += b[i];
        } else if (ins.op == Op::Sub) {
          for (std::size_t i = 0; i < width; ++i) a[i] -= b[i];
        } else if (ins.op == Op::Mul) {
          for (std::size_t i = 1; i < width; ++i) a[i] = a[i] * b[0] + a[0] * b[i];
          a[0] *= b[0];
        } else {
          if (b[0] == 0.0) domain_error("division by zero", ins.offset);
          a[0] /= b[0];
          for (std::size_t i = 1; i < width; ++i) a[i] = (a[i] - a[0] * b[i]) / b[0];
        }
        --sp;
        break;
      }
      case Op::PowInt: {
        double* a = top(0);
        const double v = checked_pow_int(a[0], ins.ipow, ins.offset);
        if (m > 0) {
          const double dv = ins.ipow == 0 ? 0.0 : ins.ipow * checked_pow_int(a[0], ins.ipow - 1, ins.offset);
          for (std::size_t i = 1; i < width; ++i) a[i] *= dv;
        }
        a[0] = v;
        break;
      }
      case Op::PowConst: {
        double* a = top(0);
        if (a[0] <= 0.0) domain_error("non-integer power of nonpositive base", ins.offset);
        const double v = std::pow(a[0], ins.value);
        const double dv = ins.value * v / a[0];
        for (std::size_t i = 1; i < width; ++i) a[i] *= dv;
        a[0] = v;
        break;
      }
      case Op::PowReal: {
        double* a = top(1);
        const double* b = top(0);
        if (a[0] <= 0.0) domain_error("non-integer power of nonpositive base", ins.offset);
        const double v = std::pow(a[0], b[0]);
        const double la = std::log(a[0]);
        for (std::size_t i = 1; i < width; ++i) a[i] = v * (b[i] * la + b[0] * a[i] / a[0]);
        a[0] = v;
        --sp;
        break;
      }
      default: {
        double* a = top(0);
        const double x = a[0];
        double v = 0.0, dv = 0.0;
        switch (ins.op) {
          case Op::Sin: v = std::sin(x); dv = std::cos(x); break;
          case Op::Cos: v = std::cos(x); dv = -std::sin(x); break;
          case Op::Exp: v = std::exp(x); dv = v; break;
          case Op::Ln:
            if (x <= 0.0) domain_error("ln of nonpositive argument", ins.offset);
            v = std::log(x);
            dv = 1.0 / x;
            break;
          case Op::Abs:
            v = std::abs(x);
            dv = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            break;
          case Op::Sqrt:
            if (x < 0.0) domain_error("sqrt of negative argument", ins.offset);
            v = std::sqrt(x);
            if (m > 0 && v == 0.0) domain_error("sqrt not differentiable at 0", ins.offset);
            dv = m > 0 ? 0.5 / v : 0.0;
            break;
          default: break;
        }
        a[0] = v;
        for (std::size_t i = 1; i < width; ++i) a[i] *= dv;
        break;
      }
    }
  }
  const double* r = base;
  for (std::size_t i = 0; i < m; ++i) grad[i] = r[i + 1];
  return r[0];
}

}  // namespace daeh::expr
