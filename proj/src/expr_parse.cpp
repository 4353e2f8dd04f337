// Recursive-descent parser for rate expressions.
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := '-' unary | power
//   power   := primary [ '^' unary ]          (right associative)
//   primary := number | constant | variable | function '(' expr { ',' expr } ')'
//            | '(' expr ')'

#include <cctype>
#include <charconv>
#include <numbers>

#include "sizestruct/expr.hpp"

namespace sizestruct {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(pos_, "empty expression");
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) {
      if (text_[pos_] == ')') throw ParseError(pos_, "unbalanced ')'");
      throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(BinaryOp::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = Expr::binary(BinaryOp::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(BinaryOp::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(BinaryOp::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::negate(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::binary(BinaryOp::pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(pos_, "expected operand at end of input");
    const char c = text_[pos_];
    if (c == '(') {
      const std::size_t open = pos_++;
      Expr inner = parse_expr();
      if (!accept(')')) {
        skip_ws();
        throw ParseError(pos_, "missing ')' for '(' at offset " + std::to_string(open));
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == ')') throw ParseError(pos_, "unbalanced ')'");
    throw ParseError(pos_, std::string("expected operand, found '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    // Exponent only when a digit follows, so "2e" is not swallowed.
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      throw ParseError(start, "malformed number");
    }
    return Expr::literal(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    skip_ws();
    const bool is_call = pos_ < text_.size() && text_[pos_] == '(';

    if (is_call) {
      auto fn = function_from_name(name);
      if (!fn) throw ParseError(start, "unknown function '" + std::string(name) + "'");
      ++pos_;
      std::vector<Expr> args;
      args.push_back(parse_expr());
      while (accept(',')) args.push_back(parse_expr());
      if (!accept(')')) {
        skip_ws();
        throw ParseError(pos_, "missing ')' in call to '" + std::string(name) + "'");
      }
      if (static_cast<int>(args.size()) != function_arity(*fn)) {
        throw ParseError(start, "'" + std::string(name) + "' takes " +
                                    std::to_string(function_arity(*fn)) + " argument(s)");
      }
      return Expr::call(*fn, std::move(args));
    }

    if (auto v = variable_from_name(name)) return Expr::variable(*v);
    if (name == "pi") return Expr::literal(std::numbers::pi);
    if (name == "e") return Expr::literal(std::numbers::e);
    if (function_from_name(name)) {
      throw ParseError(start, "function '" + std::string(name) + "' requires '('");
    }
    throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

}  // namespace sizestruct
