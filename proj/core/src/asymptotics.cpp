#include "sisrd/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "sisrd/linalg.hpp"
#include "sisrd/spectral.hpp"

namespace sisrd {

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::DIToZero: return "dI_to_0";
    case Regime::DSToZero: return "dS_to_0";
    case Regime::BothToZero: return "both_to_0";
  }
  return "unknown";
}

namespace {

void require_p1(const CoefficientSet& c, std::string_view op) {
  if (c.p() != 1.0) throw ConfigError(std::string(op) + " requires p = 1");
}

void require_plt1(const CoefficientSet& c, std::string_view op) {
  if (!(c.p() < 1.0)) throw ConfigError(std::string(op) + " requires 0 < p < 1");
}

void require_sigma_above_eta(const CoefficientSet& c, double sigma, std::string_view op) {
  if (!(sigma > c.eta().max()))
    throw ConfigError(std::string(op) + " requires sigma > eta_max (sigma = " +
                      format_double(sigma) + ", eta_max = " + format_double(c.eta().max()) + ")");
}


double sup_of_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

LimitProfile classify_dI0_p1(const CoefficientSet& c) {
  require_p1(c, "classify_dI0_p1");
  LimitProfile lp;
  lp.regime = Regime::DIToZero;
  ScalarField dfe = solve_dfe(c);
  ScalarField ceiling = c.risk_root();
  const std::size_t n = dfe.size();
  NodeMask omega(n), vanishing(n);
  for (std::size_t k = 0; k < n; ++k) {
    omega[k] = dfe[k] > ceiling[k];
    vanishing[k] = dfe[k] < ceiling[k];
  }
  lp.meta["omega_tilde_nodes"] = static_cast<double>(count(omega));
  lp.meta["no_ee_small_dI"] = count(omega) == 0 ? 1.0 : 0.0;
  lp.masks.emplace("omega_tilde", std::move(omega));
  lp.masks.emplace("vanishing", std::move(vanishing));
  lp.fields.emplace("dfe", std::move(dfe));
  lp.fields.emplace("ceiling", std::move(ceiling));
  return lp;
}

LimitProfile limit_dI0_plt1(const CoefficientSet& c, double tol) {
  require_plt1(c, "limit_dI0_plt1");
  const DomainPtr& dom = c.domain();
  const std::size_t n = dom->size();
  const auto& w = dom->measure();
  auto lap = assemble_neumann_laplacian(*dom);
  const ScalarField h = c.risk();
  const double expo = c.q() / (1.0 - c.p());

  // g(S) = (S^q/h)^{1/(1-p)}
  auto g = [&](std::size_t k, double s) { return std::pow(std::pow(s, c.q()) / h[k], 1.0 / (1.0 - c.p())); };
  auto residual = [&](const std::vector<double>& S) {
    auto LS = lap.generator.apply(S);
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      r = std::max(r, std::abs(c.d_S() * LS[k] + c.lambda()[k] - S[k] - c.eta()[k] * g(k, S[k])));
    return r;
  };

  // Linearly implicit march: the sink η g(S) is linearised about the current
  // state, so the step tends to a Newton step as dt grows.
  std::vector<double> S = solve_dfe(c).data();
  double res = residual(S);
  double dt = 1.0;
  std::size_t steps = 0, rejected = 0;
  std::vector<double> shift(n), rhs(n);
  while (res >= tol) {
    if (steps + rejected > 5000) throw ComputeError("limit_dI0_plt1: march did not reach steady state (residual " + format_double(res) + ")");
    for (std::size_t k = 0; k < n; ++k) {
      double gk = g(k, S[k]);
      double dg = expo * gk / S[k];
      shift[k] = 1.0 / dt + 1.0 + c.eta()[k] * dg;
      rhs[k] = w[k] * (S[k] / dt + c.lambda()[k] - c.eta()[k] * gk + c.eta()[k] * dg * S[k]);
    }
    auto A = shifted_stiffness(lap.stiffness, w, shift, c.d_S());
    auto sol = spd_solve(A, rhs, 1e-13, S);
    bool ok = sol.report.usable() &&
              std::all_of(sol.x.begin(), sol.x.end(), [](double v) { return v > 0.0 && std::isfinite(v); });
    double new_res = ok ? residual(sol.x) : 0.0;
    if (!ok || new_res > 10.0 * res + tol) {
      dt *= 0.5;
      ++rejected;
      if (dt < 1e-12) throw ComputeError("limit_dI0_plt1: step size underflow");
      continue;
    }
    S = std::move(sol.x);
    res = new_res;
    ++steps;
    dt = std::min(dt * 2.0, 1e12);
  }

  LimitProfile lp;
  lp.regime = Regime::DIToZero;
  ScalarField Sf(dom, S), If(dom);
  for (std::size_t k = 0; k < n; ++k) If[k] = g(k, S[k]);
  lp.S = std::move(Sf);
  lp.I = std::move(If);
  lp.meta["residual"] = res;
  lp.meta["steps"] = static_cast<double>(steps);
  lp.meta["rejected"] = static_cast<double>(rejected);
  return lp;
}

double eliminate_susceptible(double lambda, double beta, double gamma, double q, double p,
                             double I) {
  if (I <= 0.0) return lambda;
  const double Ip = std::pow(I, p);
  const double target = lambda + gamma * I;
  return solve_increasing([&](double s) { return s + beta * std::pow(s, q) * Ip; }, 0.0, target,
                          target);
}

LimitProfile limit_dS0(const CoefficientSet& c, double tol) {
  LimitProfile lp;
  lp.regime = Regime::DSToZero;
  if (c.p() == 1.0) {
    auto l0 = compute_lambda0(c);
    lp.meta["lambda0"] = l0.eigenvalue;
    if (!(l0.eigenvalue < 0.0))
      throw ConfigError("limit_dS0: lambda0 = " + format_double(l0.eigenvalue) +
                        " >= 0, no endemic limit for small d_S");
  }
  const DomainPtr& dom = c.domain();
  const std::size_t n = dom->size();
  const auto& w = dom->measure();
  auto lap = assemble_neumann_laplacian(*dom);
  const double p = c.p(), q = c.q();

  std::vector<double> I(n, 0.2), S(n), T(n), dT(n);
  auto eliminate = [&](const std::vector<double>& Iv) {
    for (std::size_t k = 0; k < n; ++k) {
      double beta = c.beta()[k], gamma = c.gamma()[k];
      double s = eliminate_susceptible(c.lambda()[k], beta, gamma, q, p, Iv[k]);
      S[k] = s;
      T[k] = c.incidence(k, s, Iv[k]);
      if (Iv[k] > 0.0) {
        double ds = (gamma - p * beta * std::pow(s, q) * std::pow(Iv[k], p - 1.0)) /
                    (1.0 + q * beta * std::pow(s, q - 1.0) * std::pow(Iv[k], p));
        dT[k] = gamma - ds;
      } else {
        dT[k] = 0.0;
      }
    }
  };
  auto residual = [&](const std::vector<double>& Iv) {
    auto LI = lap.generator.apply(Iv);
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      r = std::max(r, std::abs(c.d_I() * LI[k] + T[k] - (c.gamma()[k] + c.eta()[k]) * Iv[k]));
    return r;
  };

  eliminate(I);
  double res = residual(I);
  double dt = 0.1;
  std::size_t steps = 0, rejected = 0;
  std::vector<double> shift(n), rhs(n);
  while (res >= tol) {
    if (steps + rejected > 200000)
      throw ComputeError("limit_dS0: march did not reach steady state (residual " + format_double(res) + ")");
    // Incidence explicit; its decreasing part and the removal implicit.
    for (std::size_t k = 0; k < n; ++k) {
      double m = std::min(dT[k], 0.0);
      shift[k] = 1.0 / dt + c.gamma()[k] + c.eta()[k] - m;
      rhs[k] = w[k] * (I[k] / dt + T[k] - m * I[k]);
    }
    auto A = shifted_stiffness(lap.stiffness, w, shift, c.d_I());
    auto sol = spd_solve(A, rhs, 1e-13, I);
    bool ok = sol.report.usable() && std::all_of(sol.x.begin(), sol.x.end(), [&](double v) {
                return std::isfinite(v) && (p < 1.0 ? v > 0.0 : v >= 0.0);
              });
    if (!ok) {
      dt *= 0.5;
      ++rejected;
      if (dt < 1e-12) throw ComputeError("limit_dS0: step size underflow");
      continue;
    }
    std::vector<double> S_old = S, T_old = T, dT_old = dT;
    eliminate(sol.x);
    double new_res = residual(sol.x);
    if (new_res > 10.0 * res + tol) {
      S = std::move(S_old);
      T = std::move(T_old);
      dT = std::move(dT_old);
      dt *= 0.5;
      ++rejected;
      if (dt < 1e-12) throw ComputeError("limit_dS0: step size underflow");
      continue;
    }
    I = std::move(sol.x);
    res = new_res;
    ++steps;
    dt = std::min(dt * 1.2, 50.0);
  }

  lp.S = ScalarField(dom, S);
  lp.I = ScalarField(dom, I);
  lp.meta["residual"] = res;
  lp.meta["steps"] = static_cast<double>(steps);
  lp.meta["rejected"] = static_cast<double>(rejected);
  return lp;
}

LimitProfile limit_both_p1(const CoefficientSet& c, double sigma) {
  require_p1(c, "limit_both_p1");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const DomainPtr& dom = c.domain();
  const std::size_t n = dom->size();
  const ScalarField H = c.risk_root();
  const ScalarField r = c.recovery_ratio();
  const auto& L = c.lambda();
  const auto& eta = c.eta();

  LimitProfile lp;
  lp.regime = Regime::BothToZero;
  lp.sigma = sigma;

  const double s_lo = std::min(L.min(), std::pow(r.min(), 1.0 / c.q()));
  ScalarField s_lower(dom, s_lo), s_upper(dom, L.max()), i_lower(dom, 0.0), i_upper(dom);
  NodeMask no_infection(n), endemic(n);
  for (std::size_t k = 0; k < n; ++k) {
    double pos = std::max(L[k] - H[k], 0.0);
    i_upper[k] = pos / std::min(sigma, eta[k]);
    no_infection[k] = L[k] < H[k];
    endemic[k] = L[k] > H[k];
  }
  lp.fields.emplace("S_lower", std::move(s_lower));
  lp.fields.emplace("S_upper", std::move(s_upper));
  lp.fields.emplace("I_lower", std::move(i_lower));
  lp.fields.emplace("I_upper", std::move(i_upper));
  if (c.q() == 1.0) {
    ScalarField i_lower_q1(dom), s_upper_q1(dom);
    for (std::size_t k = 0; k < n; ++k) {
      i_lower_q1[k] = std::max(L[k] - H[k], 0.0) / eta[k];
      s_upper_q1[k] = std::min(L[k], H[k]);
    }
    lp.fields.emplace("I_lower_q1", std::move(i_lower_q1));
    lp.fields.emplace("S_upper_q1", std::move(s_upper_q1));
  }
  lp.masks.emplace("no_infection", std::move(no_infection));
  lp.masks.emplace("endemic", std::move(endemic));

  const bool closed = sigma >= eta.max();
  lp.meta["closed_form"] = closed ? 1.0 : 0.0;
  if (closed) {
    ScalarField S(dom), I(dom);
    for (std::size_t k = 0; k < n; ++k) {
      S[k] = std::min(L[k], H[k]);
      I[k] = std::max(L[k] - H[k], 0.0) / eta[k];
    }
    lp.S = std::move(S);
    lp.I = std::move(I);
  }
  return lp;
}

namespace {

/// Root of Λ = η t + H t^{e} on [0, Λ_max/η_min + 1].
double both_plt1_root(double lambda, double eta, double H, double e, double hi) {
  return solve_increasing([&](double t) { return eta * t + H * std::pow(t, e); }, 0.0, hi, lambda);
}

}  // namespace

LimitProfile limit_both_plt1(const CoefficientSet& c, double sigma) {
  require_plt1(c, "limit_both_plt1");
  require_sigma_above_eta(c, sigma, "limit_both_plt1");
  const DomainPtr& dom = c.domain();
  const std::size_t n = dom->size();
  const ScalarField H = c.risk_root();
  const double e = (1.0 - c.p()) / c.q();
  const double hi = c.lambda().max() / c.eta().min() + 1.0;
  ScalarField S(dom), I(dom);
  for (std::size_t k = 0; k < n; ++k) {
    I[k] = both_plt1_root(c.lambda()[k], c.eta()[k], H[k], e, hi);
    S[k] = H[k] * std::pow(I[k], e);
  }
  if (!(S.min() > 0.0) || !(I.min() > 0.0))
    throw ComputeError("limit_both_plt1: nonpositive limit value");
  LimitProfile lp;
  lp.regime = Regime::BothToZero;
  lp.sigma = sigma;
  lp.S = std::move(S);
  lp.I = std::move(I);
  return lp;
}

bool MonotoneSequence::is_monotone(double slack) const {
  const double sgn = direction == Direction::Increasing ? 1.0 : -1.0;
  for (std::size_t n = 0; n + 1 < v.size(); ++n) {
    for (std::size_t k = 0; k < v[n].size(); ++k) {
      if (sgn * (v[n + 1][k] - v[n][k]) < -slack) return false;
      if (sgn * (u[n + 1][k] - u[n][k]) < -slack) return false;
    }
  }
  return true;
}

double MonotoneSequence::final_error() const {
  if (u.empty()) return 0.0;
  return std::max(sup_distance(u.back(), limit_u), sup_distance(v.back(), limit_v));
}

namespace {

struct SeqSetup {
  DomainPtr dom;
  std::size_t n;
  ScalarField H;
  double start;  // ū0 = v̄0
};

SeqSetup seq_setup(const CoefficientSet& c, double sigma) {
  double lam_over_eta = 0.0;
  for (std::size_t k = 0; k < c.lambda().size(); ++k)
    lam_over_eta = std::max(lam_over_eta, c.lambda()[k] / c.eta()[k]);
  return {c.domain(), c.domain()->size(), c.risk_root(),
          c.lambda().max() + (1.0 + sigma) * lam_over_eta};
}

template <class NextV>
MonotoneSequence iterate_sequence(const CoefficientSet& c, double sigma, std::size_t n_max,
                                  Direction dir, double tol, const SeqSetup& st, NextV next_v,
                                  bool u_from_previous_v) {
  MonotoneSequence seq;
  seq.direction = dir;
  const auto& L = c.lambda();
  const auto& eta = c.eta();
  auto u_of = [&](const std::vector<double>& v) {
    std::vector<double> u(st.n);
    for (std::size_t k = 0; k < st.n; ++k) u[k] = L[k] + (1.0 - eta[k] / sigma) * v[k];
    return u;
  };
  std::vector<double> u, v;
  if (dir == Direction::Increasing) {
    v.assign(st.n, 0.0);
    u = L.data();
  } else {
    v.assign(st.n, st.start);
    u.assign(st.n, st.start);
  }
  seq.u.emplace_back(st.dom, u);
  seq.v.emplace_back(st.dom, v);
  for (std::size_t it = 0; it < n_max; ++it) {
    std::vector<double> v_next(st.n), u_next;
    // Increasing and p<1 decreasing: v_{n+1} from u_n, u_{n+1} from v_{n+1}.
    // Decreasing p = 1: v_{n+1} from u_n, u_{n+1} from v_n.
    if (dir == Direction::Decreasing && !u_from_previous_v) {
      u_next = u_of(v);
      for (std::size_t k = 0; k < st.n; ++k) v_next[k] = next_v(k, u_next[k]);
    } else {
      for (std::size_t k = 0; k < st.n; ++k) v_next[k] = next_v(k, u[k]);
      u_next = (dir == Direction::Decreasing) ? u_of(v) : u_of(v_next);
    }
    double gap = sup_of_diff(v_next, v);
    seq.gaps.push_back(gap);
    u = std::move(u_next);
    v = std::move(v_next);
    seq.u.emplace_back(st.dom, u);
    seq.v.emplace_back(st.dom, v);
    if (gap < tol) {
      seq.converged = true;
      break;
    }
  }
  return seq;
}

}  // namespace

MonotoneSequence monotone_seq_plt1(const CoefficientSet& c, double sigma, std::size_t n_max,
                                   Direction dir, double tol) {
  require_plt1(c, "monotone_seq_plt1");
  require_sigma_above_eta(c, sigma, "monotone_seq_plt1");
  const SeqSetup st = seq_setup(c, sigma);
  const double e = (1.0 - c.p()) / c.q();
  // v solves u = v + H (v/σ)^e
  auto solve_v = [&](std::size_t k, double u) {
    return solve_increasing([&](double t) { return t + st.H[k] * std::pow(t / sigma, e); }, 0.0,
                            std::max(u, 0.0), u);
  };
  // Decreasing: ū_{n+1} = Λ + (1-η/σ)v̄_n, then v̄_{n+1} from ū_{n+1}.
  auto seq = iterate_sequence(c, sigma, n_max, dir, tol, st, solve_v, false);
  seq.limit_u = ScalarField(st.dom);
  seq.limit_v = ScalarField(st.dom);
  for (std::size_t k = 0; k < st.n; ++k) {
    const double L = c.lambda()[k], eta = c.eta()[k];
    double vs = solve_increasing(
        [&](double t) { return (eta / sigma) * t + st.H[k] * std::pow(t / sigma, e); }, 0.0,
        sigma * L / eta, L);
    seq.limit_v[k] = vs;
    seq.limit_u[k] = L + (1.0 - eta / sigma) * vs;
  }
  return seq;
}

MonotoneSequence monotone_seq_p1(const CoefficientSet& c, double sigma, std::size_t n_max,
                                 Direction dir, double tol) {
  require_sigma_above_eta(c, sigma, "monotone_seq_p1");
  const SeqSetup st = seq_setup(c, sigma);
  auto next_v = [&](std::size_t k, double u) { return std::max(u - st.H[k], 0.0); };
  auto seq = iterate_sequence(c, sigma, n_max, dir, tol, st, next_v, true);
  seq.limit_u = ScalarField(st.dom);
  seq.limit_v = ScalarField(st.dom);
  for (std::size_t k = 0; k < st.n; ++k) {
    const double L = c.lambda()[k], eta = c.eta()[k], H = st.H[k];
    const double vs = (sigma / eta) * std::max(L - H, 0.0);
    seq.limit_v[k] = vs;
    seq.limit_u[k] = std::min(L, H) + vs;
  }
  return seq;
}

bool AuditReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& b) { return b.passed; });
}

double susceptible_floor_c0(const CoefficientSet& c) {
  const double target =
      c.lambda().min() /
      (1.0 + std::pow(c.d_S() / c.d_I() + 1.0 / c.eta().min(), c.p()) *
                 std::pow(c.lambda().max(), c.p()) * c.beta().max());
  const double q = c.q();
  return solve_increasing([&](double x) { return x + std::pow(x, q); }, 0.0, target, target);
}

AuditReport bounds_audit(const CoefficientSet& c, const EquilibriumResult& e) {
  if (!e.endemic) throw ConfigError("bounds audit requires an endemic equilibrium");
  e.S.require_same_domain(c.beta());
  e.I.require_same_domain(c.beta());
  AuditReport rep;
  const double tol = grid_tolerance(*c.domain());
  rep.tol_grid = tol;
  // value <= bound
  auto upper = [&](std::string name, double value, double bound) {
    double margin = bound - value;
    rep.checks.push_back({std::move(name), value, bound, margin, margin >= -tol});
  };
  // value >= bound
  auto lower = [&](std::string name, double value, double bound) {
    double margin = value - bound;
    rep.checks.push_back({std::move(name), value, bound, margin, margin >= -tol});
  };

  const double q = c.q(), p = c.p();
  const double Lmin = c.lambda().min(), Lmax = c.lambda().max();
  const double Smin = e.S.min(), Smax = e.S.max();
  const double Imin = e.I.min(), Imax = e.I.max();
  const double eta_min = c.eta().min();

  if (p == 1.0) {
    const ScalarField r = c.recovery_ratio();
    lower("S_min >= min{Lambda_min, r_min^(1/q)}", Smin,
          std::min(Lmin, std::pow(r.min(), 1.0 / q)));
    upper("S_max <= max{Lambda_max, r_max^(1/q)}", Smax,
          std::max(Lmax, std::pow(r.max(), 1.0 / q)));
    return rep;
  }

  double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0.0;
  for (std::size_t k = 0; k < c.beta().size(); ++k) {
    double ratio = c.beta()[k] / (c.gamma()[k] + c.eta()[k]);
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
  }
  const double ex = 1.0 / (1.0 - p);
  lower("I_min >= [(beta/(gamma+eta))_min S_min^q]^(1/(1-p))", Imin,
        std::pow(ratio_min * std::pow(Smin, q), ex));
  upper("I_max <= [(beta/(gamma+eta))_max S_max^q]^(1/(1-p))", Imax,
        std::pow(ratio_max * std::pow(Smax, q), ex));
  upper("S_max <= (1 + d_I/(d_S eta_min)) Lambda_max", Smax,
        (1.0 + c.d_I() / (c.d_S() * eta_min)) * Lmax);
  upper("I_max <= (d_S/d_I + 1/eta_min) Lambda_max", Imax,
        (c.d_S() / c.d_I() + 1.0 / eta_min) * Lmax);
  const double c0 = susceptible_floor_c0(c);
  rep.c0 = c0;
  lower("S_min >= c0", Smin, c0);
  lower("I_min >= [(beta/(eta+gamma))_min c0^q]^(1/(1-p))", Imin,
        std::pow(ratio_min * std::pow(c0, q), ex));
  return rep;
}

ScalarField coincidence_density(const CoefficientSet& c) {
  const ScalarField H = c.risk_root();
  auto lap = assemble_neumann_laplacian(*c.domain());
  auto LH = lap.generator.apply(H.values());
  ScalarField mu(c.domain());
  for (std::size_t k = 0; k < mu.size(); ++k)
    mu[k] = (c.d_S() * LH[k] + c.lambda()[k] - H[k]) / c.eta()[k];
  return mu;
}

NodeMask risk_indicator(const CoefficientSet& c, const ScalarField& S, double delta) {
  S.require_same_domain(c.beta());
  const ScalarField H = c.risk_root();
  NodeMask m(S.size());
  for (std::size_t k = 0; k < S.size(); ++k) m[k] = H[k] - S[k] < delta;
  return m;
}

NodeMask coincidence_mask(const CoefficientSet& c, const ScalarField& S, double delta) {
  S.require_same_domain(c.beta());
  const ScalarField H = c.risk_root();
  NodeMask m(S.size());
  for (std::size_t k = 0; k < S.size(); ++k) m[k] = std::abs(S[k] - H[k]) < delta;
  return m;
}

}  // namespace sisrd
