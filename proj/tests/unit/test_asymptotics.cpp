#include <gtest/gtest.h>

#include <cmath>

#include "sisrd/asymptotics.hpp"
#include "sisrd/equilibrium.hpp"

using namespace sisrd;

namespace {

ScalarField f(const DomainPtr& d, const char* text) {
  return ScalarField::from_expr(d, parse_expr(text));
}

CoefficientSet scenario1(const DomainPtr& d, double d_S = 1.0, double d_I = 1e-3) {
  return CoefficientSet(f(d, "3 + 2*sin(pi*x)*sin(pi*y)"), ScalarField(d, 1.0),
                        ScalarField(d, 1.0), ScalarField(d, 1.0), d_S, d_I, 1.0, 0.5);
}

std::size_t nearest(const DiscreteDomain& d, double x, double y) { return d.nearest_node({x, y}); }

// Scans n uniform samples of [lo, hi] for the sign change of g - target.
std::pair<double, double> scan_bracket(const std::function<double(double)>& g, double lo,
                                       double hi, double target, std::size_t n = 1'000'000) {
  double prev_t = lo, prev = g(lo) - target;
  for (std::size_t i = 1; i <= n; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    double v = g(t) - target;
    if (prev <= 0.0 && v >= 0.0) return {prev_t, t};
    prev_t = t;
    prev = v;
  }
  return {std::nan(""), std::nan("")};
}

}  // namespace

TEST(Bisection, MatchesBruteForceScan) {
  auto g = [](double t) { return 0.5 * t + std::sqrt(t); };
  double root = solve_increasing(g, 0.0, 3.0, 1.0);
  auto [a, b] = scan_bracket(g, 0.0, 3.0, 1.0);
  EXPECT_LE(a, root);
  EXPECT_GE(b, root);
  EXPECT_NEAR(root, 4.0 - 2.0 * std::sqrt(3.0), 1e-15);
  EXPECT_THROW(solve_increasing(g, 2.0, 3.0, 1.0), ComputeError);
}

TEST(ClassifyDI0, ScenarioOneNodes) {
  auto d = build_domain(DomainSpec::disk(0, 0, 1, 64));
  auto lp = classify_dI0_p1(scenario1(d));
  const auto& om = lp.masks.at("omega_tilde");
  const auto& van = lp.masks.at("vanishing");
  std::size_t a = nearest(*d, 0.5, 0.5), b = nearest(*d, -0.5, 0.5);
  EXPECT_TRUE(om[a]);
  EXPECT_FALSE(om[b]);
  EXPECT_TRUE(van[b]);
  double beta_a = 3 + 2 * std::sin(M_PI * d->coords()[a].x) * std::sin(M_PI * d->coords()[a].y);
  EXPECT_NEAR(lp.fields.at("ceiling")[a], std::pow(2.0 / beta_a, 2.0), 1e-12);
  for (std::size_t k = 0; k < d->size(); ++k) {
    double x = d->coords()[k].x, y = d->coords()[k].y;
    double beta = 3 + 2 * std::sin(M_PI * x) * std::sin(M_PI * y);
    if (std::abs(beta - 2.0) > 1e-6) EXPECT_EQ(bool(om[k]), beta > 2.0);
  }
  EXPECT_EQ(lp.meta.at("no_ee_small_dI"), 0.0);
}

TEST(ClassifyDI0, EmptyWhenCeilingEqualsRecruitment) {
  auto d = build_domain(DomainSpec::interval(0, 1, 17));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 1.0, 1.0, 1e-3, 1.0, 1.0);
  auto lp = classify_dI0_p1(c);
  EXPECT_EQ(count(lp.masks.at("omega_tilde")), 0u);
  EXPECT_EQ(lp.meta.at("no_ee_small_dI"), 1.0);
  auto all = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1e-3, 1.0, 1.0);
  EXPECT_EQ(count(classify_dI0_p1(all).masks.at("omega_tilde")), d->size());
  auto sat = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1e-3, 0.5, 1.0);
  EXPECT_THROW(classify_dI0_p1(sat), ConfigError);
}

TEST(LimitDI0, ConstantSaturating) {
  // 1 - S - S^2/2 = 0.
  auto d = build_domain(DomainSpec::interval(0, 1, 17));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 1.0, 1.0, 1e-3, 0.5, 1.0);
  auto lp = limit_dI0_plt1(c);
  const double s = std::sqrt(3.0) - 1.0;
  EXPECT_LE(sup_distance(*lp.S, ScalarField(d, s)), 1e-9);
  EXPECT_LE(sup_distance(*lp.I, ScalarField(d, s * s)), 1e-9);
  EXPECT_LE(lp.meta.at("residual"), 1e-10);
}

TEST(LimitDI0, GoldenRatioCase) {
  // h = 1, η = 1: 1 - S - S^2 = 0.
  auto d = build_domain(DomainSpec::interval(0, 1, 17));
  auto c = CoefficientSet::constant(d, 1.5, 0.5, 1.0, 1.0, 1.0, 1e-3, 0.5, 1.0);
  auto lp = limit_dI0_plt1(c);
  EXPECT_NEAR((*lp.S)[4], 0.618034, 1e-6);
  EXPECT_NEAR((*lp.I)[4], 0.381966, 1e-6);
}

TEST(LimitDI0, HeterogeneousResidual) {
  auto d = build_domain(DomainSpec::interval(0, 1, 129));
  CoefficientSet c(ScalarField(d, 1.0), ScalarField(d, 0.5), ScalarField(d, 0.5),
                   f(d, "1 + 0.5*sin(pi*x)"), 0.01, 1e-3, 0.5, 1.0);
  auto lp = limit_dI0_plt1(c);
  EXPECT_LT(lp.meta.at("residual"), 1e-8);
  EXPECT_GT(lp.S->min(), 0.0);
  auto mass = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1e-3, 1.0, 1.0);
  EXPECT_THROW(limit_dI0_plt1(mass), ConfigError);
}

TEST(LimitDS0, ConstantCases) {
  auto d = build_domain(DomainSpec::interval(0, 1, 17));
  auto mass = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1e-3, 1.0, 1.0, 1.0);
  auto a = limit_dS0(mass);
  EXPECT_LE(sup_distance(*a.S, ScalarField(d, 1.0)), 1e-8);
  EXPECT_LE(sup_distance(*a.I, ScalarField(d, 2.0)), 1e-8);

  auto sat = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 1.0, 1e-3, 1.0, 0.5, 1.0);
  auto b = limit_dS0(sat);
  auto e = limit_dI0_plt1(sat);
  EXPECT_LE(sup_distance(*b.S, *e.S), 1e-8);
  EXPECT_LE(sup_distance(*b.I, *e.I), 1e-8);

  auto sub = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 0.5, 1e-3, 1.0, 1.0, 1.0);
  EXPECT_THROW(limit_dS0(sub), ConfigError);
}

TEST(LimitDS0, PointwiseElimination) {
  EXPECT_NEAR(eliminate_susceptible(2.0, 1.0, 0.5, 1.0, 1.0, 4.0), 0.8, 1e-14);
  double s = eliminate_susceptible(1.3, 2.0, 0.4, 0.5, 0.5, 0.7);
  auto g = [](double t) { return t + 2.0 * std::sqrt(t) * std::sqrt(0.7); };
  auto [a, b] = scan_bracket(g, 0.0, 1.3 + 0.4 * 0.7, 1.3 + 0.4 * 0.7);
  EXPECT_LE(a, s);
  EXPECT_GE(b, s);
}

TEST(LimitBothP1, ClosedForm) {
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1e-3, 1e-3, 1.0, 1.0);
  auto lp = limit_both_p1(c, 1.0);
  ASSERT_TRUE(lp.has_fields());
  EXPECT_LE(sup_distance(*lp.S, ScalarField(d, 1.0)), 1e-15);
  EXPECT_LE(sup_distance(*lp.I, ScalarField(d, 2.0)), 1e-15);
  EXPECT_TRUE(lp.fields.count("I_lower_q1"));
  EXPECT_THROW(limit_both_p1(CoefficientSet::constant(d, 1, 0.5, 0.5, 2, 1, 1, 0.5, 1), 1.0),
               ConfigError);
}

TEST(LimitBothP1, ScenarioOneNodes) {
  auto d = build_domain(DomainSpec::disk(0, 0, 1, 64));
  auto c = scenario1(d);
  auto lp = limit_both_p1(c, 2.0);
  ASSERT_TRUE(lp.has_fields());
  for (auto [x, y] : {std::pair{0.5, 0.5}, std::pair{-0.5, 0.5}}) {
    std::size_t k = nearest(*d, x, y);
    double beta = 3 + 2 * std::sin(M_PI * d->coords()[k].x) * std::sin(M_PI * d->coords()[k].y);
    double ceil = std::pow(2.0 / beta, 2.0);
    EXPECT_NEAR((*lp.S)[k], std::min(1.0, ceil), 1e-14);
    EXPECT_NEAR((*lp.I)[k], std::max(1.0 - ceil, 0.0), 1e-14);
  }
  for (std::size_t k = 0; k < d->size(); ++k)
    EXPECT_NEAR(c.lambda()[k] - (*lp.S)[k] - c.eta()[k] * (*lp.I)[k], 0.0, 1e-15);
}

TEST(LimitBothP1, EnvelopeOnlyForSmallSigma) {
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 1.5, 4.0, 1e-3, 1e-3, 1.0, 1.0);
  auto lp = limit_both_p1(c, 0.5);
  EXPECT_FALSE(lp.has_fields());
  for (const char* k : {"S_lower", "S_upper", "I_lower", "I_upper"}) EXPECT_TRUE(lp.fields.count(k));
  auto low = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 0.5, 1e-3, 1e-3, 1.0, 1.0);
  auto z = limit_both_p1(low, 1.0);
  EXPECT_EQ(z.I->max(), 0.0);
  EXPECT_LE(sup_distance(*z.S, low.lambda()), 0.0);
}

TEST(LimitBothPlt1, GoldenRatioAndIdentity) {
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  auto c = CoefficientSet::constant(d, 1.5, 0.5, 1.0, 1.0, 1e-3, 2e-3, 0.5, 1.0);
  auto lp = limit_both_plt1(c, 2.0);
  const double s = (std::sqrt(5.0) - 1.0) / 2.0;
  EXPECT_NEAR((*lp.I)[0], s * s, 1e-12);
  EXPECT_NEAR((*lp.S)[0], s, 1e-12);
  // η + h = Λ with h = 1, η = 2: I* = 1.
  auto fixed = CoefficientSet::constant(d, 3.0, 1.0, 2.0, 3.0, 1e-3, 3e-3, 0.5, 1.0);
  auto f1 = limit_both_plt1(fixed, 3.0);
  EXPECT_NEAR((*f1.I)[0], 1.0, 1e-12);
  EXPECT_THROW(limit_both_plt1(fixed, 1.0), ConfigError);
}

TEST(LimitBothPlt1, HeterogeneousIdentity) {
  auto d = build_domain(DomainSpec::disk(0, 0, 1, 32));
  CoefficientSet c(f(d, "3 + 2*sin(pi*x)*sin(pi*y)"), ScalarField(d, 1.0), f(d, "1 + 0.5*x"),
                   f(d, "1 + 0.3*y"), 1e-3, 3e-3, 0.5, 0.7);
  auto lp = limit_both_plt1(c, 2.0);
  EXPECT_GT(lp.S->min(), 0.0);
  EXPECT_GT(lp.I->min(), 0.0);
  for (std::size_t k = 0; k < d->size(); ++k)
    EXPECT_NEAR((*lp.S)[k] + c.eta()[k] * (*lp.I)[k], c.lambda()[k], 1e-10);
  // Brute-force oracle at one node.
  std::size_t k = d->size() / 3;
  double h = c.risk_root()[k], eta = c.eta()[k], e = (1 - 0.5) / 0.7;
  auto g = [&](double t) { return eta * t + h * std::pow(t, e); };
  auto [a, b] = scan_bracket(g, 0.0, c.lambda().max() / c.eta().min() + 1, c.lambda()[k]);
  EXPECT_LE(a, (*lp.I)[k]);
  EXPECT_GE(b, (*lp.I)[k]);
}

TEST(MonotoneSequence, SaturatingConstantIterates) {
  auto d = build_domain(DomainSpec::interval(0, 1, 5));
  auto c = CoefficientSet::constant(d, 1.5, 0.5, 1.0, 1.0, 1e-3, 2e-3, 0.5, 1.0);
  auto inc = monotone_seq_plt1(c, 2.0, 10000, Direction::Increasing);
  ASSERT_GE(inc.v.size(), 2u);
  EXPECT_NEAR(inc.v[1][0], 0.5, 1e-14);
  EXPECT_NEAR(inc.u[1][0], 1.25, 1e-14);
  const double s = (std::sqrt(5.0) - 1.0) / 2.0;  // v/2 + sqrt(v/2) = 1 with sqrt(v/2) = s
  EXPECT_NEAR(inc.limit_v[0], 2 * s * s, 1e-12);
  EXPECT_NEAR(inc.limit_u[0], 1.0 + 0.5 * 2 * s * s, 1e-12);
  EXPECT_NEAR(inc.limit_v[0], 0.763932, 1e-6);
  EXPECT_NEAR(inc.limit_u[0], 1.381966, 1e-6);
  EXPECT_TRUE(inc.converged);
  EXPECT_TRUE(inc.is_monotone());
  auto dec = monotone_seq_plt1(c, 2.0, 10000, Direction::Decreasing);
  EXPECT_TRUE(dec.is_monotone());
  EXPECT_LE(sup_distance(inc.v.back(), dec.v.back()), 1e-8);
  EXPECT_LE(inc.final_error(), 1e-10);
  EXPECT_LE(dec.final_error(), 1e-10);
  EXPECT_THROW(monotone_seq_plt1(c, 1.0, 10, Direction::Increasing), ConfigError);
}

TEST(MonotoneSequence, MassActionConstantIterates) {
  auto d = build_domain(DomainSpec::interval(0, 1, 5));
  auto c = CoefficientSet::constant(d, 1.5, 0.5, 1.0, 2.0, 1e-3, 2e-3, 1.0, 1.0);
  auto inc = monotone_seq_p1(c, 2.0, 10000, Direction::Increasing);
  const double v[] = {0.0, 1.0, 1.5, 1.75};
  const double u[] = {2.0, 2.5, 2.75};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(inc.v[i][0], v[i], 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(inc.u[i][0], u[i], 1e-15);
  EXPECT_NEAR(inc.limit_v[0], 2.0, 1e-15);
  EXPECT_NEAR(inc.limit_u[0], 3.0, 1e-15);
  EXPECT_TRUE(inc.is_monotone());
  auto dec = monotone_seq_p1(c, 2.0, 10000, Direction::Decreasing);
  EXPECT_TRUE(dec.is_monotone());
  EXPECT_LE(sup_distance(inc.v.back(), dec.v.back()), 1e-8);
  EXPECT_LE(sup_distance(inc.u.back(), dec.u.back()), 1e-8);
}

TEST(MonotoneSequence, NoInfectionBelowCeiling) {
  auto d = build_domain(DomainSpec::interval(0, 1, 5));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 0.5, 1e-3, 2e-3, 1.0, 1.0);
  auto inc = monotone_seq_p1(c, 2.0, 50, Direction::Increasing);
  for (std::size_t n = 0; n < inc.v.size(); ++n) {
    EXPECT_EQ(inc.v[n].max(), 0.0);
    EXPECT_LE(sup_distance(inc.u[n], c.lambda()), 0.0);
  }
}

TEST(MonotoneSequence, HeterogeneousSandwich) {
  auto d = build_domain(DomainSpec::disk(0, 0, 1, 24));
  auto c = scenario1(d);
  CoefficientSet sat(c.beta(), c.gamma(), c.eta(), c.lambda(), 1e-3, 2e-3, 0.5, 0.5);
  for (bool p1 : {true, false}) {
    const CoefficientSet& cc = p1 ? c : sat;
    auto make = [&](Direction dir) {
      return p1 ? monotone_seq_p1(cc, 2.0, 100000, dir) : monotone_seq_plt1(cc, 2.0, 100000, dir);
    };
    auto inc = make(Direction::Increasing);
    auto dec = make(Direction::Decreasing);
    EXPECT_TRUE(inc.is_monotone());
    EXPECT_TRUE(dec.is_monotone());
    EXPECT_LE(sup_distance(inc.v.back(), dec.v.back()), 1e-8);
    EXPECT_LE(inc.final_error(), 1e-10);
    EXPECT_LE(dec.final_error(), 1e-10);
  }
}

TEST(Audit, FloorConstantAndBounds) {
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 1.0, 1.0, 0.7, 0.7, 0.5, 1.0);
  EXPECT_NEAR(susceptible_floor_c0(c), (1.0 / (1.0 + std::sqrt(2.0))) / 2.0, 1e-12);
  EXPECT_NEAR(susceptible_floor_c0(c), 0.207107, 1e-6);

  auto m = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
  auto e = evaluate_equilibrium(m, ScalarField(d, 1.0), ScalarField(d, 2.0));
  auto rep = bounds_audit(m, e);
  EXPECT_TRUE(rep.all_passed());
  bool lower = false, upper = false;
  for (const auto& chk : rep.checks) {
    if (chk.name.rfind("S_min >=", 0) == 0) {
      lower = true;
      EXPECT_DOUBLE_EQ(chk.bound, 0.5);
    }
    if (chk.name.rfind("S_max <=", 0) == 0) {
      upper = true;
      EXPECT_DOUBLE_EQ(chk.bound, 2.0);
    }
  }
  EXPECT_TRUE(lower && upper);
  auto dfe = evaluate_equilibrium(m, ScalarField(d, 2.0), ScalarField(d, 0.0));
  EXPECT_THROW(bounds_audit(m, dfe), ConfigError);
}

TEST(Audit, FlagsViolation) {
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  auto m = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
  auto e = evaluate_equilibrium(m, ScalarField(d, 3.0), ScalarField(d, 2.0));
  EXPECT_FALSE(bounds_audit(m, e).all_passed());
}

TEST(Masks, RiskAndCoincidence) {
  auto d = build_domain(DomainSpec::interval(0, 1, 5));
  auto c = CoefficientSet::constant(d, 1.0, 0.5, 0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
  ScalarField s(d, {0.5, 0.99, 1.0, 1.005, 2.0});
  auto r = risk_indicator(c, s, 1e-2);
  auto m = coincidence_mask(c, s, 1e-2);
  std::vector<bool> re{false, false, true, true, true}, me{false, false, true, true, false};
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(bool(r[k]), re[k]);
    EXPECT_EQ(bool(m[k]), me[k]);
  }
  auto dens = coincidence_density(c);
  EXPECT_NEAR(dens[2], 2.0, 1e-12);
}
