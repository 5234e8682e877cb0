#pragma once

// Minimal arithmetic language for coefficient formulas such as
// "3+2*sin(pi*x)*sin(pi*y)".
//
// Grammar (whitespace-insensitive):
//   expr      := term (('+' | '-') term)*
//   term      := unary (('*' | '/') unary)*
//   unary     := '-' unary | power
//   power     := primary ('^' unary)?            right associative
//   primary   := number | 'x' | 'y' | 'pi' | '(' expr ')'
//              | func '(' expr (',' expr)* ')'
//              | 'piecewise' '(' var (';' expr ':' expr)* ';' 'else' ':' expr ')'
//   func      := sin cos exp sqrt abs min max pos
//
// A piecewise branch "t: e" is taken when var <= t; branches are tried in
// order and the else branch catches the rest.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sisrd/error.hpp"

namespace sisrd {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class ExprKind {
  Number,
  VarX,
  VarY,
  Pi,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Call,
  Piecewise,
};

enum class Function { Sin, Cos, Exp, Sqrt, Abs, Min, Max, Pos };

struct ExprNode;

/// Immutable expression tree. Copies share structure.
class Expr {
 public:
  Expr() = default;

  static Expr number(double v);
  static Expr variable(char name);
  static Expr pi();
  static Expr negate(Expr operand);
  static Expr binary(ExprKind op, Expr lhs, Expr rhs);
  static Expr call(Function fn, std::vector<Expr> args);
  struct Branch;
  static Expr piecewise(char var, std::vector<Branch> branches, Expr otherwise);

  ExprKind kind() const;
  bool empty() const noexcept { return node_ == nullptr; }

  double evaluate(Point p) const;

  /// Canonical text; parse(to_string()) reproduces the same tree.
  std::string to_string() const;

  /// True when the tree only uses C-infinity building blocks (no abs, min,
  /// max, pos or piecewise), so second differences of it are meaningful.
  bool is_smooth() const;

  friend bool operator==(const Expr& a, const Expr& b);

  const ExprNode& node() const { return *node_; }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;
};

struct Expr::Branch {
  Expr threshold;
  Expr value;
};

struct ExprNode {
  ExprKind kind = ExprKind::Number;
  double value = 0.0;                  // Number
  Function fn = Function::Sin;         // Call
  char var = 'x';                      // Piecewise
  std::vector<Expr> children;          // operands / call args
  std::vector<Expr::Branch> branches;  // Piecewise
  Expr otherwise;                      // Piecewise
};

/// Parse formula text. Throws ParseError on malformed input or unknown
/// identifiers.
Expr parse_expr(std::string_view text);

std::string_view function_name(Function fn);

}  // namespace sisrd
