#include "sisrd/equilibrium.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "sisrd/linalg.hpp"

namespace sisrd {

ScalarField solve_dfe(const CoefficientSet& c) {
  const DomainPtr& dom = c.domain();
  auto lap = assemble_neumann_laplacian(*dom);
  const auto& w = dom->measure();
  const double one = 1.0;
  auto A = shifted_stiffness(lap.stiffness, w, std::span(&one, 1), c.d_S());
  std::vector<double> rhs(dom->size());
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = w[k] * c.lambda()[k];
  auto sol = spd_solve(A, rhs, 1e-12, c.lambda().values());
  if (!sol.report.usable())
    throw ComputeError("disease-free equilibrium solve did not converge (residual " +
                       format_double(sol.report.residual) + ")");
  return ScalarField(dom, std::move(sol.x));
}

SimState default_initial_state(const DomainPtr& dom) {
  return {ScalarField(dom, 0.8), ScalarField(dom, 0.2), 0.0};
}

EllipticResidual elliptic_residual(const CoefficientSet& c, const ScalarField& S,
                                   const ScalarField& I) {
  S.require_same_domain(c.beta());
  I.require_same_domain(c.beta());
  auto lap = assemble_neumann_laplacian(*c.domain());
  auto LS = lap.generator.apply(S.values());
  auto LI = lap.generator.apply(I.values());
  EllipticResidual r{ScalarField(c.domain()), ScalarField(c.domain())};
  for (std::size_t k = 0; k < S.size(); ++k) {
    double T = c.incidence(k, S[k], I[k]);
    r.S[k] = c.d_S() * LS[k] + c.lambda()[k] - S[k] - T + c.gamma()[k] * I[k];
    r.I[k] = c.d_I() * LI[k] + T - (c.gamma()[k] + c.eta()[k]) * I[k];
  }
  return r;
}

double conservation_gap(const CoefficientSet& c, const ScalarField& S, const ScalarField& I) {
  ScalarField total = S;
  for (std::size_t k = 0; k < total.size(); ++k) total[k] += c.eta()[k] * I[k];
  double L = integrate(c.lambda());
  return std::abs(integrate(total) - L) / L;
}

bool is_endemic(const ScalarField& I) {
  return integrate(I) > 1e-10 * I.domain()->total_measure();
}

double grid_tolerance(const DiscreteDomain& dom) { return 1e-6 + 2.0 * dom.h() * dom.h(); }

EquilibriumResult evaluate_equilibrium(const CoefficientSet& c, ScalarField S, ScalarField I) {
  EquilibriumResult e;
  auto r = elliptic_residual(c, S, I);
  e.residual_S = norm_inf(r.S.values());
  e.residual_I = norm_inf(r.I.values());
  e.conservation_gap = conservation_gap(c, S, I);
  e.endemic = is_endemic(I);
  e.S = std::move(S);
  e.I = std::move(I);
  return e;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct NewtonOutcome {
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> S, I;
  std::string note;
};

NewtonOutcome newton_polish(const CoefficientSet& c, const ScalarField& S0,
                            const ScalarField& I0, const EeOptions& opts) {
  const std::size_t n = S0.size();
  const auto lap = assemble_neumann_laplacian(*c.domain());
  const SparseOperator& L = lap.generator;
  const double p = c.p(), q = c.q();
  const auto& beta = c.beta();
  const auto& gamma = c.gamma();
  const auto& eta = c.eta();
  const auto& lambda = c.lambda();

  NewtonOutcome out;
  out.S = S0.data();
  out.I = I0.data();

  auto residual = [&](const std::vector<double>& S, const std::vector<double>& I, Vec& F) {
    auto LS = L.apply(S);
    auto LI = L.apply(I);
    F.resize(static_cast<Eigen::Index>(2 * n));
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double T = c.incidence(k, S[k], I[k]);
      F[static_cast<Eigen::Index>(k)] = c.d_S() * LS[k] + lambda[k] - S[k] - T + gamma[k] * I[k];
      F[static_cast<Eigen::Index>(n + k)] = c.d_I() * LI[k] + T - (gamma[k] + eta[k]) * I[k];
      m = std::max({m, std::abs(F[static_cast<Eigen::Index>(k)]),
                    std::abs(F[static_cast<Eigen::Index>(n + k)])});
    }
    return m;
  };

  Vec F;
  double fnorm = residual(out.S, out.I, F);
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  for (std::size_t it = 0; it < opts.newton_max_iter; ++it) {
    if (fnorm <= opts.newton_tol) {
      out.converged = true;
      return out;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(L.val.size() * 2 + 4 * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
        auto ri = static_cast<int>(r), ci = static_cast<int>(L.col[k]);
        auto off = static_cast<int>(n);
        trip.emplace_back(ri, ci, c.d_S() * L.val[k]);
        trip.emplace_back(ri + off, ci + off, c.d_I() * L.val[k]);
      }
    for (std::size_t k = 0; k < n; ++k) {
      double S = out.S[k], I = out.I[k];
      double Sq = std::pow(S, q);
      double dT_dS = (I > 0.0) ? q * beta[k] * std::pow(S, q - 1.0) * std::pow(I, p) : 0.0;
      double dT_dI;
      if (p == 1.0)
        dT_dI = beta[k] * Sq;
      else if (I > 0.0)
        dT_dI = p * beta[k] * Sq * std::pow(I, p - 1.0);
      else {
        out.note = "newton: I vanishes at a node with p < 1";
        return out;
      }
      auto ki = static_cast<int>(k), off = static_cast<int>(n);
      trip.emplace_back(ki, ki, -1.0 - dT_dS);
      trip.emplace_back(ki, ki + off, -dT_dI + gamma[k]);
      trip.emplace_back(ki + off, ki, dT_dS);
      trip.emplace_back(ki + off, ki + off, dT_dI - gamma[k] - eta[k]);
    }
    SpMat J(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(2 * n));
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    lu.compute(J);
    if (lu.info() != Eigen::Success) {
      out.note = "newton: singular Jacobian";
      return out;
    }
    Vec delta = lu.solve(-F);
    if (lu.info() != Eigen::Success || !delta.allFinite()) {
      out.note = "newton: linear solve failed";
      return out;
    }

    bool accepted = false;
    double step = 1.0;
    std::vector<double> S1(n), I1(n);
    Vec F1;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      bool admissible = true;
      for (std::size_t k = 0; k < n && admissible; ++k) {
        S1[k] = out.S[k] + step * delta[static_cast<Eigen::Index>(k)];
        I1[k] = out.I[k] + step * delta[static_cast<Eigen::Index>(n + k)];
        if (!(S1[k] > 0.0)) admissible = false;
        if (p < 1.0) {
          if (!(I1[k] > 0.0)) admissible = false;
        } else if (I1[k] < 0.0) {
          I1[k] = 0.0;  // project onto I >= 0
        }
      }
      if (!admissible) continue;
      double f1 = residual(S1, I1, F1);
      if (f1 < (1.0 - 1e-4 * step) * fnorm || f1 <= opts.newton_tol) {
        out.S.swap(S1);
        out.I.swap(I1);
        F = std::move(F1);
        fnorm = f1;
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) {
      out.note = "newton: line search stalled at residual " + format_double(fnorm);
      return out;
    }
  }
  out.converged = fnorm <= opts.newton_tol;
  if (!out.converged) out.note = "newton: iteration budget exhausted";
  return out;
}

}  // namespace

EquilibriumResult find_ee(const CoefficientSet& c, const SimState& init, const EeOptions& opts) {
  validate_state(init, c, true);
  if (!(init.I.max() > 0.0)) throw ConfigError("initial I must not vanish identically");

  RunResult march = run(init, c, opts.stop);
  ScalarField S = march.state.S;
  ScalarField I = march.state.I;
  bool polished = false;
  std::size_t newton_its = 0;
  std::string note;
  if (opts.newton) {
    auto nw = newton_polish(c, S, I, opts);
    newton_its = nw.iterations;
    if (nw.converged) {
      S = ScalarField(c.domain(), std::move(nw.S));
      I = ScalarField(c.domain(), std::move(nw.I));
      polished = true;
    } else {
      note = nw.note;
    }
  }
  if (!march.steady && !polished)
    throw ComputeError("equilibrium not reached: march stopped at t=" +
                       format_double(march.state.t) + " with change rate " +
                       format_double(march.change_rate) + (note.empty() ? "" : "; " + note));

  EquilibriumResult e = evaluate_equilibrium(c, std::move(S), std::move(I));
  e.march_steps = march.steps;
  e.march_time = march.state.t;
  e.march_steady = march.steady;
  e.max_mass_defect = march.max_mass_defect;
  e.newton_applied = polished;
  e.newton_iterations = newton_its;
  e.note = note;
  return e;
}

bool DiagnosticsReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

DiagnosticsReport diagnostics(const CoefficientSet& c, const EquilibriumResult& e) {
  DiagnosticsReport rep;
  rep.conservation_gap = e.conservation_gap;
  rep.residual_S = e.residual_S;
  rep.residual_I = e.residual_I;
  rep.tol_grid = grid_tolerance(*c.domain());
  const auto& S = e.S;
  const auto& I = e.I;

  auto reaction_S = [&](std::size_t k) {
    return c.lambda()[k] - S[k] - c.incidence(k, S[k], I[k]) + c.gamma()[k] * I[k];
  };
  auto reaction_I = [&](std::size_t k) {
    return c.incidence(k, S[k], I[k]) - (c.gamma()[k] + c.eta()[k]) * I[k];
  };
  auto reaction_w = [&](std::size_t k) { return c.lambda()[k] - S[k] - c.eta()[k] * I[k]; };

  auto add = [&](std::string name, std::size_t node, double reaction, bool at_max) {
    ExtremumCheck chk;
    chk.name = std::move(name);
    chk.node = node;
    chk.reaction = reaction;
    chk.margin = at_max ? reaction : -reaction;
    chk.passed = chk.margin >= -rep.tol_grid;
    rep.checks.push_back(chk);
  };
  add("S_max", S.argmax(), reaction_S(S.argmax()), true);
  add("S_min", S.argmin(), reaction_S(S.argmin()), false);
  add("I_max", I.argmax(), reaction_I(I.argmax()), true);
  add("I_min", I.argmin(), reaction_I(I.argmin()), false);

  ScalarField w(c.domain());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = c.d_S() * S[k] + c.d_I() * I[k];
  add("w_max", w.argmax(), reaction_w(w.argmax()), true);
  add("w_min", w.argmin(), reaction_w(w.argmin()), false);
  return rep;
}

}  // namespace sisrd
