#include "sisrd/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <utility>

namespace sisrd {

namespace {

std::shared_ptr<ExprNode> make(ExprKind k) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  return n;
}

struct FunctionInfo {
  std::string_view name;
  Function fn;
  int min_args;
  int max_args;
};

constexpr std::array<FunctionInfo, 8> kFunctions{{
    {"sin", Function::Sin, 1, 1},
    {"cos", Function::Cos, 1, 1},
    {"exp", Function::Exp, 1, 1},
    {"sqrt", Function::Sqrt, 1, 1},
    {"abs", Function::Abs, 1, 1},
    {"min", Function::Min, 2, 64},
    {"max", Function::Max, 2, 64},
    {"pos", Function::Pos, 1, 1},
}};

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

char op_char(ExprKind k) {
  switch (k) {
    case ExprKind::Add: return '+';
    case ExprKind::Sub: return '-';
    case ExprKind::Mul: return '*';
    case ExprKind::Div: return '/';
    case ExprKind::Pow: return '^';
    default: return '?';
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    skip_ws();
    if (at_end()) fail("empty formula");
    Expr e = parse_sum();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                         text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (at_end()) fail(std::string("expected '") + c + "' but input ended");
    if (text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = Expr::binary(ExprKind::Add, lhs, parse_product());
      else if (accept('-'))
        lhs = Expr::binary(ExprKind::Sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::binary(ExprKind::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = Expr::binary(ExprKind::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::negate(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::binary(ExprKind::Pow, base, parse_unary());
    return base;
  }

  std::string_view identifier() {
    std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '_'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Expr parse_primary() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept('(')) {
      Expr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      std::string_view id = identifier();
      if (id == "x") return Expr::variable('x');
      if (id == "y") return Expr::variable('y');
      if (id == "pi") return Expr::pi();
      if (id == "piecewise") return parse_piecewise(start);
      for (const auto& info : kFunctions) {
        if (info.name != id) continue;
        expect('(');
        std::vector<Expr> args;
        args.push_back(parse_sum());
        while (accept(',')) args.push_back(parse_sum());
        expect(')');
        int n = static_cast<int>(args.size());
        if (n < info.min_args || n > info.max_args)
          fail_at("wrong number of arguments to " + std::string(id), start);
        return Expr::call(info.fn, std::move(args));
      }
      fail_at("unknown identifier '" + std::string(id) + "'", start);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '.'))
      ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (!at_end() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (at_end() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        pos_ = save;
      } else {
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_)
      fail_at("malformed number", start);
    return Expr::number(v);
  }

  Expr parse_piecewise(std::size_t start) {
    expect('(');
    skip_ws();
    std::size_t var_at = pos_;
    std::string_view var = identifier();
    if (var != "x" && var != "y") fail_at("piecewise variable must be x or y", var_at);
    std::vector<Expr::Branch> branches;
    for (;;) {
      expect(';');
      skip_ws();
      std::size_t save = pos_;
      if (identifier() == "else") {
        expect(':');
        Expr otherwise = parse_sum();
        expect(')');
        return Expr::piecewise(var[0], std::move(branches), std::move(otherwise));
      }
      pos_ = save;
      Expr threshold = parse_sum();
      expect(':');
      Expr value = parse_sum();
      branches.push_back({std::move(threshold), std::move(value)});
      if (branches.size() > 1024) fail_at("piecewise has too many branches", start);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double checked(double v, const Expr& e) {
  if (!std::isfinite(v)) throw EvalError("non-finite result", e.to_string());
  return v;
}

}  // namespace

Expr Expr::number(double v) {
  auto n = make(ExprKind::Number);
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(char name) {
  return Expr(make(name == 'y' ? ExprKind::VarY : ExprKind::VarX));
}

Expr Expr::pi() { return Expr(make(ExprKind::Pi)); }

Expr Expr::negate(Expr operand) {
  auto n = make(ExprKind::Neg);
  n->children.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::binary(ExprKind op, Expr lhs, Expr rhs) {
  auto n = make(op);
  n->children.push_back(std::move(lhs));
  n->children.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::call(Function fn, std::vector<Expr> args) {
  auto n = make(ExprKind::Call);
  n->fn = fn;
  n->children = std::move(args);
  return Expr(std::move(n));
}

Expr Expr::piecewise(char var, std::vector<Branch> branches, Expr otherwise) {
  auto n = make(ExprKind::Piecewise);
  n->var = var;
  n->branches = std::move(branches);
  n->otherwise = std::move(otherwise);
  return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }

std::string_view function_name(Function fn) {
  for (const auto& info : kFunctions)
    if (info.fn == fn) return info.name;
  return "?";
}

double Expr::evaluate(Point p) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Number: return n.value;
    case ExprKind::VarX: return p.x;
    case ExprKind::VarY: return p.y;
    case ExprKind::Pi: return std::numbers::pi;
    case ExprKind::Neg: return -n.children[0].evaluate(p);
    case ExprKind::Add:
      return checked(n.children[0].evaluate(p) + n.children[1].evaluate(p), *this);
    case ExprKind::Sub:
      return checked(n.children[0].evaluate(p) - n.children[1].evaluate(p), *this);
    case ExprKind::Mul:
      return checked(n.children[0].evaluate(p) * n.children[1].evaluate(p), *this);
    case ExprKind::Div: {
      double den = n.children[1].evaluate(p);
      if (den == 0.0) throw EvalError("division by zero", to_string());
      return checked(n.children[0].evaluate(p) / den, *this);
    }
    case ExprKind::Pow: {
      double base = n.children[0].evaluate(p);
      double ex = n.children[1].evaluate(p);
      if (base < 0.0 && ex != std::floor(ex))
        throw EvalError("fractional power of a negative base", to_string());
      if (base == 0.0 && ex < 0.0) throw EvalError("division by zero", to_string());
      return checked(std::pow(base, ex), *this);
    }
    case ExprKind::Call: {
      double a = n.children[0].evaluate(p);
      switch (n.fn) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Exp: return checked(std::exp(a), *this);
        case Function::Sqrt:
          if (a < 0.0) throw EvalError("square root of a negative value", to_string());
          return std::sqrt(a);
        case Function::Abs: return std::abs(a);
        case Function::Pos: return a > 0.0 ? a : 0.0;
        case Function::Min:
        case Function::Max: {
          double r = a;
          for (std::size_t i = 1; i < n.children.size(); ++i) {
            double b = n.children[i].evaluate(p);
            r = n.fn == Function::Min ? std::min(r, b) : std::max(r, b);
          }
          return r;
        }
      }
      break;
    }
    case ExprKind::Piecewise: {
      double v = n.var == 'y' ? p.y : p.x;
      for (const auto& b : n.branches)
        if (v <= b.threshold.evaluate(p)) return b.value.evaluate(p);
      return n.otherwise.evaluate(p);
    }
  }
  throw EvalError("malformed expression", "?");
}

std::string Expr::to_string() const {
  if (!node_) return "";
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Number:
      return n.value < 0.0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
    case ExprKind::VarX: return "x";
    case ExprKind::VarY: return "y";
    case ExprKind::Pi: return "pi";
    case ExprKind::Neg: return "(-" + n.children[0].to_string() + ")";
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div:
    case ExprKind::Pow:
      return "(" + n.children[0].to_string() + " " + op_char(n.kind) + " " +
             n.children[1].to_string() + ")";
    case ExprKind::Call: {
      std::string s(function_name(n.fn));
      s += "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += ", ";
        s += n.children[i].to_string();
      }
      return s + ")";
    }
    case ExprKind::Piecewise: {
      std::string s = "piecewise(";
      s += n.var;
      for (const auto& b : n.branches)
        s += "; " + b.threshold.to_string() + ": " + b.value.to_string();
      return s + "; else: " + n.otherwise.to_string() + ")";
    }
  }
  return "?";
}

bool Expr::is_smooth() const {
  const ExprNode& n = *node_;
  if (n.kind == ExprKind::Piecewise) return false;
  if (n.kind == ExprKind::Call &&
      (n.fn == Function::Abs || n.fn == Function::Min || n.fn == Function::Max ||
       n.fn == Function::Pos))
    return false;
  for (const auto& c : n.children)
    if (!c.is_smooth()) return false;
  return true;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const ExprNode& x = *a.node_;
  const ExprNode& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprKind::Number: return x.value == y.value;
    case ExprKind::Call:
      if (x.fn != y.fn) return false;
      break;
    case ExprKind::Piecewise:
      if (x.var != y.var || x.branches.size() != y.branches.size()) return false;
      for (std::size_t i = 0; i < x.branches.size(); ++i)
        if (!(x.branches[i].threshold == y.branches[i].threshold) ||
            !(x.branches[i].value == y.branches[i].value))
          return false;
      return x.otherwise == y.otherwise;
    default: break;
  }
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (!(x.children[i] == y.children[i])) return false;
  return true;
}

Expr parse_expr(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace sisrd
