#include "sizestruct/expr.hpp"

#include <charconv>
#include <cmath>
#include <utility>

#include "expr_ops.hpp"

namespace sizestruct {

namespace {

constexpr std::array<std::string_view, kVariableCount> kVariableNames = {"s", "P", "Q", "tau",
                                                                         "delta"};

constexpr std::array<std::string_view, 9> kFunctionNames = {"sin", "cos",  "exp", "ln", "sqrt",
                                                            "abs", "sign", "max", "min"};

}  // namespace

std::string_view variable_name(Variable v) { return kVariableNames[Bindings::index(v)]; }

std::optional<Variable> variable_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kVariableNames.size(); ++i) {
    if (kVariableNames[i] == name) return static_cast<Variable>(i);
  }
  return std::nullopt;
}

std::string_view function_name(Function f) { return kFunctionNames[static_cast<std::size_t>(f)]; }

std::optional<Function> function_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFunctionNames.size(); ++i) {
    if (kFunctionNames[i] == name) return static_cast<Function>(i);
  }
  return std::nullopt;
}

int function_arity(Function f) { return (f == Function::max || f == Function::min) ? 2 : 1; }

ParseError::ParseError(std::size_t offset, const std::string& what)
    : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

double Bindings::get(Variable v) const {
  if (!has(v)) {
    throw EvalError(EvalError::Kind::unbound_variable,
                    "unbound variable '" + std::string(variable_name(v)) + "'");
  }
  return values_[index(v)];
}

struct Expr::Node {
  Kind kind = Kind::literal;
  double value = 0.0;
  Variable var = Variable::s;
  BinaryOp op = BinaryOp::add;
  Function fn = Function::sin;
  std::vector<Expr> args;
  std::uint8_t vars = 0;
};

Expr::Expr() : Expr(literal(0.0)) {}

Expr Expr::literal(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::literal;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(Variable v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::variable;
  n->var = v;
  n->vars = Bindings::bit(v);
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::negate;
  n->vars = operand.variables();
  n->args.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::binary;
  n->op = op;
  n->vars = lhs.variables() | rhs.variables();
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::call(Function f, std::vector<Expr> args) {
  if (static_cast<int>(args.size()) != function_arity(f)) {
    throw std::invalid_argument("wrong number of arguments for " + std::string(function_name(f)));
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::call;
  n->fn = f;
  for (const auto& a : args) n->vars |= a.variables();
  n->args = std::move(args);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::literal_value() const { return node_->value; }
Variable Expr::variable_id() const { return node_->var; }
BinaryOp Expr::binary_op() const { return node_->op; }
Function Expr::function() const { return node_->fn; }
const std::vector<Expr>& Expr::operands() const { return node_->args; }
std::uint8_t Expr::variables() const { return node_->vars; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::literal:
      return a.literal_value() == b.literal_value();
    case Expr::Kind::variable:
      return a.variable_id() == b.variable_id();
    case Expr::Kind::negate:
      break;
    case Expr::Kind::binary:
      if (a.binary_op() != b.binary_op()) return false;
      break;
    case Expr::Kind::call:
      if (a.function() != b.function()) return false;
      break;
  }
  const auto& x = a.operands();
  const auto& y = b.operands();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] == y[i])) return false;
  }
  return true;
}

double eval_expr(const Expr& e, const Bindings& b) {
  switch (e.kind()) {
    case Expr::Kind::literal:
      return e.literal_value();
    case Expr::Kind::variable:
      return b.get(e.variable_id());
    case Expr::Kind::negate:
      return -eval_expr(e.operands()[0], b);
    case Expr::Kind::binary:
      return detail::apply_binary(e.binary_op(), eval_expr(e.operands()[0], b),
                                  eval_expr(e.operands()[1], b));
    case Expr::Kind::call: {
      const auto& args = e.operands();
      if (args.size() == 2) {
        return detail::apply_binary_function(e.function(), eval_expr(args[0], b),
                                             eval_expr(args[1], b));
      }
      return detail::apply_unary_function(e.function(), eval_expr(args[0], b));
    }
  }
  return 0.0;
}

namespace {

void print_literal(double v, std::string& out) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), std::fabs(v));
  if (ec != std::errc()) {
    out += "nan";
    return;
  }
  if (std::signbit(v)) {
    out += "(-";
    out.append(buf, end);
    out += ')';
  } else {
    out.append(buf, end);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::literal:
      print_literal(e.literal_value(), out);
      return;
    case Expr::Kind::variable:
      out += variable_name(e.variable_id());
      return;
    case Expr::Kind::negate:
      out += "(-";
      print(e.operands()[0], out);
      out += ')';
      return;
    case Expr::Kind::binary: {
      static constexpr char kOps[] = {'+', '-', '*', '/', '^'};
      out += '(';
      print(e.operands()[0], out);
      out += ' ';
      out += kOps[static_cast<int>(e.binary_op())];
      out += ' ';
      print(e.operands()[1], out);
      out += ')';
      return;
    }
    case Expr::Kind::call: {
      out += function_name(e.function());
      out += '(';
      bool first = true;
      for (const auto& a : e.operands()) {
        if (!first) out += ", ";
        first = false;
        print(a, out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

}  // namespace sizestruct
