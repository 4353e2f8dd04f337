#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sizestruct {

/// Names an expression may reference. `delta` is only meaningful for
/// initial-history expressions.
enum class Variable : std::uint8_t { s = 0, P, Q, tau, delta };
inline constexpr std::size_t kVariableCount = 5;

std::string_view variable_name(Variable v);
std::optional<Variable> variable_from_name(std::string_view name);

enum class BinaryOp : std::uint8_t { add, sub, mul, div, pow };

// `sign` is not meant for hand-written rates but it is accepted by the parser
// so that printed derivatives of abs/max/min parse back.
enum class Function : std::uint8_t { sin, cos, exp, ln, sqrt, abs, sign, max, min };

std::string_view function_name(Function f);
std::optional<Function> function_from_name(std::string_view name);
int function_arity(Function f);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { unbound_variable, domain };
  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Partial assignment of values to variables.
class Bindings {
 public:
  Bindings() = default;

  Bindings& set(Variable v, double value) {
    values_[index(v)] = value;
    mask_ |= bit(v);
    return *this;
  }
  bool has(Variable v) const { return (mask_ & bit(v)) != 0; }
  double get(Variable v) const;
  std::uint8_t mask() const { return mask_; }
  const std::array<double, kVariableCount>& values() const { return values_; }

  static constexpr std::size_t index(Variable v) { return static_cast<std::size_t>(v); }
  static constexpr std::uint8_t bit(Variable v) { return std::uint8_t(1u << index(v)); }

 private:
  std::array<double, kVariableCount> values_{};
  std::uint8_t mask_ = 0;
};

/// Immutable expression tree. Copies share nodes.
class Expr {
 public:
  enum class Kind : std::uint8_t { literal, variable, negate, binary, call };

  struct Node;

  Expr();  // literal 0

  static Expr literal(double value);
  static Expr variable(Variable v);
  static Expr negate(Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr call(Function f, std::vector<Expr> args);

  Kind kind() const;
  double literal_value() const;
  Variable variable_id() const;
  BinaryOp binary_op() const;
  Function function() const;
  /// Operands: one for negate, two for binary, arity for call.
  const std::vector<Expr>& operands() const;

  bool is_literal() const { return kind() == Kind::literal; }
  bool is_literal(double v) const { return is_literal() && literal_value() == v; }

  /// Bitmask of the variables referenced anywhere in the tree.
  std::uint8_t variables() const;
  bool depends_on(Variable v) const { return (variables() & Bindings::bit(v)) != 0; }

  /// Structural equality; literals compare by exact value.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr parse_expr(std::string_view text);

double eval_expr(const Expr& e, const Bindings& b);

/// Exact symbolic partial derivative. Literal subtrees are folded and
/// multiplications/additions by literal 0 or 1 are dropped; nothing else is
/// simplified. d|x| = sign(x) dx with sign(0) = 0; max/min use
/// ((da+db) +/- sign(a-b)(da-db))/2, which averages at ties.
Expr diff_expr(const Expr& e, Variable v);

/// Canonical fully parenthesised form; parses back to an identical tree.
std::string to_string(const Expr& e);

/// Flattened postfix program for hot loops. Same results and errors as
/// eval_expr.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double operator()(const Bindings& b) const;
  std::uint8_t required_variables() const { return required_; }

 private:
  struct Instr {
    std::uint8_t op;
    std::uint8_t arg;
    double value;
  };
  void emit(const Expr& e, int depth);

  std::vector<Instr> code_;
  std::uint8_t required_ = 0;
  int max_depth_ = 0;
};

}  // namespace sizestruct
