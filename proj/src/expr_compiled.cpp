#include <algorithm>

#include "expr_ops.hpp"
#include "sizestruct/expr.hpp"

namespace sizestruct {

namespace {

enum Op : std::uint8_t {
  kPushLiteral,
  kPushVariable,
  kNegate,
  kBinary,     // arg = BinaryOp
  kCall1,      // arg = Function
  kCall2,      // arg = Function
};

constexpr int kInlineStack = 64;

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) : required_(e.variables()) { emit(e, 1); }

void CompiledExpr::emit(const Expr& e, int depth) {
  max_depth_ = std::max(max_depth_, depth);
  switch (e.kind()) {
    case Expr::Kind::literal:
      code_.push_back({kPushLiteral, 0, e.literal_value()});
      return;
    case Expr::Kind::variable:
      code_.push_back({kPushVariable, static_cast<std::uint8_t>(e.variable_id()), 0.0});
      return;
    case Expr::Kind::negate:
      emit(e.operands()[0], depth);
      code_.push_back({kNegate, 0, 0.0});
      return;
    case Expr::Kind::binary:
      emit(e.operands()[0], depth);
      emit(e.operands()[1], depth + 1);
      code_.push_back({kBinary, static_cast<std::uint8_t>(e.binary_op()), 0.0});
      return;
    case Expr::Kind::call: {
      const auto& args = e.operands();
      for (std::size_t i = 0; i < args.size(); ++i) emit(args[i], depth + static_cast<int>(i));
      code_.push_back({args.size() == 2 ? kCall2 : kCall1,
                       static_cast<std::uint8_t>(e.function()), 0.0});
      return;
    }
  }
}

double CompiledExpr::operator()(const Bindings& b) const {
  if ((b.mask() & required_) != required_) {
    for (std::size_t i = 0; i < kVariableCount; ++i) {
      const auto v = static_cast<Variable>(i);
      if ((required_ & Bindings::bit(v)) != 0) b.get(v);  // throws for the first unbound one
    }
  }
  if (code_.empty()) return 0.0;

  double inline_stack[kInlineStack];
  std::vector<double> heap_stack;
  double* stack = inline_stack;
  if (max_depth_ > kInlineStack) {
    heap_stack.resize(static_cast<std::size_t>(max_depth_));
    stack = heap_stack.data();
  }

  const auto& values = b.values();
  int top = -1;
  for (const Instr& in : code_) {
    switch (in.op) {
      case kPushLiteral:
        stack[++top] = in.value;
        break;
      case kPushVariable:
        stack[++top] = values[in.arg];
        break;
      case kNegate:
        stack[top] = -stack[top];
        break;
      case kBinary:
        --top;
        stack[top] = detail::apply_binary(static_cast<BinaryOp>(in.arg), stack[top], stack[top + 1]);
        break;
      case kCall1:
        stack[top] = detail::apply_unary_function(static_cast<Function>(in.arg), stack[top]);
        break;
      case kCall2:
        --top;
        stack[top] =
            detail::apply_binary_function(static_cast<Function>(in.arg), stack[top], stack[top + 1]);
        break;
    }
  }
  return stack[0];
}

}  // namespace sizestruct
