#pragma once

// Scalar expressions: parsing, printing, evaluation and first-order
// forward-mode differentiation.  Grammar in docs/grammar.md.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace daeh::expr {

using Bindings = std::map<std::string, double, std::less<>>;

enum class NodeKind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
enum class Function { Sin, Cos, Exp, Ln, Abs, Sqrt };

std::string_view function_name(Function fn);
std::optional<Function> function_from_name(std::string_view name);

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;  // Constant
  std::string name;    // Variable
  Function fn = Function::Sin;
  std::shared_ptr<const Node> lhs;  // unary operand / call argument
  std::shared_ptr<const Node> rhs;
  std::size_t offset = 0;  // byte offset in the source text
};

struct DualValue {
  double value = 0.0;
  std::map<std::string, double, std::less<>> partials;
};

/// Immutable expression tree.  Copies share structure.
class Expr {
 public:
  Expr();  // the constant 0

  static Expr parse(std::string_view source);
  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr call(Function fn, const Expr& arg);
  static Expr pow(const Expr& base, const Expr& exponent);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

  double eval(const Bindings& bindings) const;
  DualValue eval_dual(const Bindings& bindings,
                      const std::vector<std::string>& seeds) const;

  const std::set<std::string>& free_variables() const { return *free_; }
  std::string to_string() const;

  /// Replaces variables simultaneously; names not in the map are kept.
  Expr substitute(const std::map<std::string, Expr, std::less<>>& replacement) const;

  /// Derivative tree with respect to `var` (no simplification).
  Expr derivative(std::string_view var) const;

  bool structurally_equal(const Expr& other) const;
  const Node& root() const { return *root_; }

 private:
  explicit Expr(std::shared_ptr<const Node> root);

  std::shared_ptr<const Node> root_;
  std::shared_ptr<const std::set<std::string>> free_;
};

/// Postfix program over numbered slots; the hot path for the integrators.
class Program {
 public:
  using SlotResolver = std::function<std::optional<std::size_t>(std::string_view)>;

  Program() = default;
  static Program compile(const Expr& e, const SlotResolver& slot_of);

  double eval(std::span<const double> slots) const;

  /// Value plus partials with respect to `seed_slots`, written into `grad`.
  double eval_grad(std::span<const double> slots,
                   std::span<const std::size_t> seed_slots,
                   std::span<double> grad) const;

  bool empty() const { return code_.empty(); }

 private:
  enum class Op : unsigned char {
    Const, Slot, Neg, Add, Sub, Mul, Div, PowInt, PowReal, PowConst,
    Sin, Cos, Exp, Ln, Abs, Sqrt,
  };
  struct Instr {
    Op op;
    int ipow = 0;
    std::size_t slot = 0;
    double value = 0.0;
    std::size_t offset = 0;
  };

  void emit(const Node& node, const SlotResolver& slot_of);

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

}  // namespace daeh::expr
