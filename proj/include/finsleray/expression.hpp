#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "finsleray/errors.hpp"
#include "finsleray/format.hpp"
#include "finsleray/jet.hpp"
#include "finsleray/linalg.hpp"

namespace finsleray {

// Parsed scalar field over the position variables x1, x2, x3.
//
// Grammar (EBNF):
//   expr   := ('+'|'-')? term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' number)?
//   base   := number | var | func '(' expr ')' | '(' expr ')'
//   var    := 'x1' | 'x2' | 'x3'
//   func   := 'sqrt' | 'exp' | 'log' | 'sin' | 'cos'
//
// Exponents are numeric literals; a leading unary minus is accepted on an
// expression (also right after '(' ).
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, Var, Add, Sub, Mul, Div, Pow, Neg, Call };
  enum class Func { Sqrt, Exp, Log, Sin, Cos };

  Kind kind;
  double number = 0.0;   // Number, and the exponent for Pow
  int var = 0;           // Var: 0..2
  Func func = Func::Sqrt;
  ExprPtr a, b;
};

inline ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->number = v;
  return e;
}
inline ExprPtr make_var(int v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var = v;
  return e;
}
inline ExprPtr make_binary(Expr::Kind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
inline ExprPtr make_pow(ExprPtr a, double exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->a = std::move(a);
  e->number = exponent;
  return e;
}
inline ExprPtr make_neg(ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Neg;
  e->a = std::move(a);
  return e;
}
inline ExprPtr make_call(Expr::Func f, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Call;
  e->func = f;
  e->a = std::move(a);
  return e;
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input or operator");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) {
    std::ostringstream os;
    os << "parse error at byte " << pos_ << ": expected " << expected;
    throw ParseError(os.str(), pos_, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr expr() {
    bool neg = false;
    skip_ws();
    if (eat('+')) {
    } else if (eat('-')) {
      neg = true;
    }
    ExprPtr e = term();
    if (neg) e = make_neg(e);
    for (;;) {
      if (eat('+'))
        e = make_binary(Expr::Kind::Add, e, term());
      else if (eat('-'))
        e = make_binary(Expr::Kind::Sub, e, term());
      else
        break;
    }
    return e;
  }

  ExprPtr term() {
    ExprPtr e = factor();
    for (;;) {
      if (eat('*'))
        e = make_binary(Expr::Kind::Mul, e, factor());
      else if (eat('/'))
        e = make_binary(Expr::Kind::Div, e, factor());
      else
        break;
    }
    return e;
  }

  ExprPtr factor() {
    ExprPtr e = base();
    if (eat('^')) {
      double x = number_literal();
      e = make_pow(e, x);
    }
    return e;
  }

  double number_literal() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
    bool digits = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      digits = true;
    }
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        digits = true;
      }
    }
    if (!digits) {
      pos_ = start;
      fail("number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' belonged to something else
      }
    }
    return std::stod(std::string(text_.substr(start, pos_ - start)));
  }

  ExprPtr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("number, variable, function or '('");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make_number(number_literal());
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!eat(')')) fail("')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string_view word = text_.substr(start, pos_ - start);
      if (word == "x1") return make_var(0);
      if (word == "x2") return make_var(1);
      if (word == "x3") return make_var(2);
      Expr::Func f;
      if (word == "sqrt")
        f = Expr::Func::Sqrt;
      else if (word == "exp")
        f = Expr::Func::Exp;
      else if (word == "log")
        f = Expr::Func::Log;
      else if (word == "sin")
        f = Expr::Func::Sin;
      else if (word == "cos")
        f = Expr::Func::Cos;
      else {
        pos_ = start;
        fail("one of x1, x2, x3, sqrt, exp, log, sin, cos");
      }
      if (!eat('(')) fail("'('");
      ExprPtr arg = expr();
      if (!eat(')')) fail("')'");
      return make_call(f, arg);
    }
    fail("number, variable, function or '('");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ExprPtr parse_field(std::string_view text) { return detail::Parser(text).parse(); }

// scalar-generic evaluation; T is double or Jet
template <class T>
T eval_expr(const Expr& e, const Vec3T<T>& x) {
  switch (e.kind) {
    case Expr::Kind::Number:
      if constexpr (std::is_same_v<T, double>)
        return e.number;
      else
        return T::constant(e.number);
    case Expr::Kind::Var:
      return x[static_cast<std::size_t>(e.var)];
    case Expr::Kind::Add:
      return eval_expr(*e.a, x) + eval_expr(*e.b, x);
    case Expr::Kind::Sub:
      return eval_expr(*e.a, x) - eval_expr(*e.b, x);
    case Expr::Kind::Mul:
      return eval_expr(*e.a, x) * eval_expr(*e.b, x);
    case Expr::Kind::Div: {
      T num = eval_expr(*e.a, x);
      T den = eval_expr(*e.b, x);
      if constexpr (std::is_same_v<T, double>) {
        if (den == 0.0) throw DomainError("division by zero");
      }
      return num / den;
    }
    case Expr::Kind::Neg:
      return -eval_expr(*e.a, x);
    case Expr::Kind::Pow: {
      T b = eval_expr(*e.a, x);
      if constexpr (std::is_same_v<T, double>) {
        double ri = std::round(e.number);
        if (ri == e.number && std::abs(e.number) <= 32) {
          double r = 1.0, base = b;
          long n = static_cast<long>(ri);
          bool neg = n < 0;
          if (neg) n = -n;
          while (n) {
            if (n & 1) r *= base;
            base *= base;
            n >>= 1;
          }
          if (neg) {
            if (r == 0.0) throw DomainError("division by zero in power");
            r = 1.0 / r;
          }
          return r;
        }
        if (b <= 0.0) throw DomainError("pow of non-positive base with non-integer exponent");
        return std::pow(b, e.number);
      } else {
        return pow(b, e.number);
      }
    }
    case Expr::Kind::Call: {
      T a = eval_expr(*e.a, x);
      if constexpr (std::is_same_v<T, double>) {
        switch (e.func) {
          case Expr::Func::Sqrt:
            if (a <= 0.0) throw DomainError("sqrt of non-positive value");
            return std::sqrt(a);
          case Expr::Func::Exp:
            return std::exp(a);
          case Expr::Func::Log:
            if (a <= 0.0) throw DomainError("log of non-positive value");
            return std::log(a);
          case Expr::Func::Sin:
            return std::sin(a);
          case Expr::Func::Cos:
            return std::cos(a);
        }
      } else {
        switch (e.func) {
          case Expr::Func::Sqrt:
            return sqrt(a);
          case Expr::Func::Exp:
            return exp(a);
          case Expr::Func::Log:
            return log(a);
          case Expr::Func::Sin:
            return sin(a);
          case Expr::Func::Cos:
            return cos(a);
        }
      }
      throw DomainError("unknown function");
    }
  }
  throw DomainError("corrupt expression node");
}

// printer; print(parse(s)) parses back to the same tree
inline void print_expr(const Expr& e, std::ostream& os, int parent_prec = 0) {
  auto binary = [&](const char* op, int prec, int rhs_bump) {
    if (parent_prec > prec) os << '(';
    print_expr(*e.a, os, prec);
    os << ' ' << op << ' ';
    print_expr(*e.b, os, prec + rhs_bump);
    if (parent_prec > prec) os << ')';
  };
  switch (e.kind) {
    case Expr::Kind::Number:
      // a bare negative literal is not a valid factor; print it as (-c)
      if (e.number < 0 && parent_prec > 0)
        os << "(" << format_shortest(e.number) << ")";
      else
        os << format_shortest(e.number);
      break;
    case Expr::Kind::Var:
      os << 'x' << (e.var + 1);
      break;
    case Expr::Kind::Add:
      binary("+", 1, 1);
      break;
    case Expr::Kind::Sub:
      binary("-", 1, 1);
      break;
    case Expr::Kind::Mul:
      binary("*", 2, 1);
      break;
    case Expr::Kind::Div:
      binary("/", 2, 1);
      break;
    case Expr::Kind::Neg:
      if (parent_prec > 0) os << '(';
      os << '-';
      print_expr(*e.a, os, 2);
      if (parent_prec > 0) os << ')';
      break;
    case Expr::Kind::Pow: {
      os << '(';
      print_expr(*e.a, os, 3);
      os << ")^" << format_shortest(e.number);
      break;
    }
    case Expr::Kind::Call: {
      static const char* names[] = {"sqrt", "exp", "log", "sin", "cos"};
      os << names[static_cast<int>(e.func)] << '(';
      print_expr(*e.a, os, 0);
      os << ')';
      break;
    }
  }
}

inline std::string to_string(const ExprPtr& e) {
  std::ostringstream os;
  print_expr(*e, os);
  return os.str();
}

inline bool tree_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Number:
      return a.number == b.number;
    case Expr::Kind::Var:
      return a.var == b.var;
    case Expr::Kind::Pow:
      return a.number == b.number && tree_equal(*a.a, *b.a);
    case Expr::Kind::Neg:
      return tree_equal(*a.a, *b.a);
    case Expr::Kind::Call:
      return a.func == b.func && tree_equal(*a.a, *b.a);
    default:
      return tree_equal(*a.a, *b.a) && tree_equal(*a.b, *b.b);
  }
}

}  // namespace finsleray
