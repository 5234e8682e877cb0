#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "sisrd/expr.hpp"

using namespace sisrd;

namespace {

constexpr double kPi = std::numbers::pi;

double f_piece(double x) {
  if (x <= 0.0) return 0.5 + 0.4 * x * x;
  if (x <= 0.25) return 0.5;
  if (x <= 0.5) return 0.5 + 0.4 * (x - 0.25) * (x - 0.25);
  return 0.5 + 1.6 * (x - 0.625) * (x - 0.625);
}

const char* kFText =
    "piecewise(x; 0: 0.5 + 0.4*x^2; 0.25: 0.5; 0.5: 0.5 + 0.4*(x - 0.25)^2; else: 0.5 + "
    "1.6*(x - 0.625)^2)";
const char* kFTextY =
    "piecewise(y; 0: 0.5 + 0.4*y^2; 0.25: 0.5; 0.5: 0.5 + 0.4*(y - 0.25)^2; else: 0.5 + "
    "1.6*(y - 0.625)^2)";

}  // namespace

TEST(ExprParse, TopLevelSumForScenarioBeta) {
  Expr e = parse_expr("3+2*sin(pi*x)*sin(pi*y)");
  EXPECT_EQ(e.kind(), ExprKind::Add);
}

TEST(ExprParse, SingleVariable) {
  EXPECT_EQ(parse_expr("x").kind(), ExprKind::VarX);
  EXPECT_EQ(parse_expr("  y ").kind(), ExprKind::VarY);
}

TEST(ExprParse, IncompleteInputReportsOffset) {
  try {
    parse_expr("2*");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(ExprParse, UnknownIdentifier) {
  try {
    parse_expr("1 + foo(x)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(parse_expr("z"), ParseError);
  EXPECT_THROW(parse_expr(""), ParseError);
  EXPECT_THROW(parse_expr("sin(x"), ParseError);
  EXPECT_THROW(parse_expr("(1+2))"), ParseError);
  EXPECT_THROW(parse_expr("min(x)"), ParseError);
}

TEST(ExprParse, Precedence) {
  EXPECT_DOUBLE_EQ(parse_expr("2+3*4").evaluate({}), 14.0);
  EXPECT_DOUBLE_EQ(parse_expr("2^3^2").evaluate({}), 512.0);
  EXPECT_DOUBLE_EQ(parse_expr("-2^2").evaluate({}), -4.0);
  EXPECT_DOUBLE_EQ(parse_expr("2^-1").evaluate({}), 0.5);
  EXPECT_DOUBLE_EQ(parse_expr("8/4/2").evaluate({}), 1.0);
  EXPECT_DOUBLE_EQ(parse_expr("8-4-2").evaluate({}), 2.0);
  EXPECT_DOUBLE_EQ(parse_expr("1.5e2 + 2E-1").evaluate({}), 150.2);
}

TEST(ExprEval, ScenarioBetaAtHighRiskPoint) {
  EXPECT_NEAR(parse_expr("3+2*sin(pi*x)*sin(pi*y)").evaluate({0.5, 0.5}), 5.0, 1e-15);
  EXPECT_NEAR(parse_expr("3+2*sin(pi*x)*sin(pi*y)").evaluate({-0.5, 0.5}), 1.0, 1e-15);
}

TEST(ExprEval, PositivePart) {
  EXPECT_EQ(parse_expr("pos(x-1)").evaluate({0.3, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(parse_expr("pos(x-1)").evaluate({1.5, 0.0}), 0.5);
}

TEST(ExprEval, PiecewiseFirstMatchingBranchWins) {
  Expr f = parse_expr(kFText);
  EXPECT_DOUBLE_EQ(f.evaluate({0.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(f.evaluate({0.25, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(f.evaluate({0.625, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(f.evaluate({-1.0, 0.0}), 0.9);
  EXPECT_DOUBLE_EQ(f.evaluate({1.0, 0.0}), 0.5 + 1.6 * 0.375 * 0.375);
}

TEST(ExprEval, NamedDomainErrors) {
  EXPECT_THROW(parse_expr("1/x").evaluate({0.0, 0.0}), EvalError);
  EXPECT_THROW(parse_expr("x^0.5").evaluate({-1.0, 0.0}), EvalError);
  EXPECT_THROW(parse_expr("0^-1").evaluate({}), EvalError);
  try {
    parse_expr("1 + sqrt(x - 2)").evaluate({1.0, 0.0});
    FAIL() << "expected EvalError";
  } catch (const EvalError& e) {
    EXPECT_NE(e.subexpression().find("sqrt"), std::string::npos);
  }
  EXPECT_DOUBLE_EQ(parse_expr("x^2").evaluate({-3.0, 0.0}), 9.0);
}

TEST(ExprEval, Functions) {
  Point p{0.3, -0.7};
  EXPECT_DOUBLE_EQ(parse_expr("exp(x)").evaluate(p), std::exp(0.3));
  EXPECT_DOUBLE_EQ(parse_expr("cos(y)").evaluate(p), std::cos(-0.7));
  EXPECT_DOUBLE_EQ(parse_expr("abs(y)").evaluate(p), 0.7);
  EXPECT_DOUBLE_EQ(parse_expr("min(x, y, 2)").evaluate(p), -0.7);
  EXPECT_DOUBLE_EQ(parse_expr("max(x, y)").evaluate(p), 0.3);
}

TEST(ExprSmooth, FlagsNonSmoothBuildingBlocks) {
  EXPECT_TRUE(parse_expr("3+2*sin(pi*x)*sin(pi*y)").is_smooth());
  EXPECT_FALSE(parse_expr("abs(x)").is_smooth());
  EXPECT_FALSE(parse_expr("1 + pos(x)").is_smooth());
  EXPECT_FALSE(parse_expr(kFText).is_smooth());
}

TEST(ExprRoundTrip, CorpusReparsesToSameTree) {
  const char* corpus[] = {
      "x",
      "y",
      "pi",
      "-x",
      "--x",
      "3+2*sin(pi*x)*sin(pi*y)",
      "1.5+sin(pi*x)*sin(pi*y)",
      "0.5",
      "0.1",
      "1 + 0.5*sin(pi*x)",
      "2^3^2",
      "(2^3)^2",
      "-2^2",
      "x - (y - 1)",
      "x/(y/2)",
      "exp(-x^2 - y^2)",
      "sqrt(x^2 + y^2)",
      "abs(x) + pos(y - 0.5)",
      "min(x, y, 0.25) * max(1, x)",
      "cos(2*pi*x) / (1 + y^2)",
      "1e-3 * x + 2.5E+2",
      kFText,
      "piecewise(y; -0.5: 1; else: 2) * piecewise(x; 0: x; else: -x)",
      "(-1)^2 + -(-(3))",
  };
  for (const char* text : corpus) {
    Expr a = parse_expr(text);
    std::string printed = a.to_string();
    Expr b = parse_expr(printed);
    EXPECT_TRUE(a == b) << text << " -> " << printed;
    EXPECT_EQ(printed, b.to_string()) << text;
  }
}

TEST(ExprProperty, MatchesHandClosuresOnRandomPoints) {
  struct Case {
    std::string text;
    std::function<double(double, double)> ref;
  };
  const std::vector<Case> cases = {
      {"3+2*sin(pi*x)*sin(pi*y)",
       [](double x, double y) { return 3.0 + 2.0 * std::sin(kPi * x) * std::sin(kPi * y); }},
      {"1.5+sin(pi*x)*sin(pi*y)",
       [](double x, double y) { return 1.5 + std::sin(kPi * x) * std::sin(kPi * y); }},
      {"1", [](double, double) { return 1.0; }},
      {"0.5", [](double, double) { return 0.5; }},
      {"0.1", [](double, double) { return 0.1; }},
      {std::string(kFText) + " * " + kFTextY,
       [](double x, double y) { return f_piece(x) * f_piece(y); }},
  };
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& c : cases) {
    Expr e = parse_expr(c.text);
    for (int i = 0; i < 1000; ++i) {
      double x = u(rng), y = u(rng);
      double got = e.evaluate({x, y});
      double want = c.ref(x, y);
      EXPECT_LE(std::abs(got - want), 1e-15 * std::max(1.0, std::abs(want)))
          << c.text << " at (" << x << ", " << y << ")";
    }
  }
}
