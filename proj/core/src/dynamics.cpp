#include "sisrd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sisrd/linalg.hpp"

namespace sisrd {

ImexStepper::ImexStepper(const CoefficientSet& c, double solver_tol)
    : c_(c), lap_(assemble_neumann_laplacian(*c.domain())), solver_tol_(solver_tol) {}

StepOutcome ImexStepper::step(const SimState& state, double dt) const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const DomainPtr& dom = c_.domain();
  state.S.require_same_domain(c_.beta());
  state.I.require_same_domain(c_.beta());
  const std::size_t n = dom->size();
  const auto& w = dom->measure();
  const auto& S = state.S;
  const auto& I = state.I;
  const auto& gamma = c_.gamma();
  const auto& eta = c_.eta();
  const auto& lambda = c_.lambda();

  std::vector<double> rhs_S(n), rhs_I(n), shift_I(n);
  for (std::size_t k = 0; k < n; ++k) {
    double T = c_.incidence(k, S[k], I[k]);
    double R = gamma[k] * I[k];
    rhs_S[k] = w[k] * (S[k] / dt + lambda[k] - T + R);
    rhs_I[k] = w[k] * (I[k] / dt + T - R);
    shift_I[k] = 1.0 / dt + eta[k];
  }
  const double shift_S = 1.0 / dt + 1.0;
  auto A_S = shifted_stiffness(lap_.stiffness, w, std::span(&shift_S, 1), c_.d_S());
  auto A_I = shifted_stiffness(lap_.stiffness, w, shift_I, c_.d_I());
  auto sol_S = spd_solve(A_S, rhs_S, solver_tol_, S.values());
  auto sol_I = spd_solve(A_I, rhs_I, solver_tol_, I.values());

  StepOutcome out;
  out.stats.dt = dt;
  if (!sol_S.report.usable() || !sol_I.report.usable()) return out;

  // Negative entries at the solver's resolution are rounding, not sign loss.
  double I_max = 0.0;
  for (double v : sol_I.x) I_max = std::max(I_max, std::abs(v));
  const double floor = solver_tol_ * I_max;
  for (double& v : sol_I.x)
    if (v < 0.0 && -v <= floor) v = 0.0;

  out.state.S = ScalarField(dom, std::move(sol_S.x));
  out.state.I = ScalarField(dom, std::move(sol_I.x));
  out.state.t = state.t + dt;
  const auto& S1 = out.state.S;
  const auto& I1 = out.state.I;
  out.stats.min_S = S1.min();
  out.stats.min_I = I1.min();
  if (!S1.all_finite() || !I1.all_finite()) return out;
  if (out.stats.min_S <= 0.0 || out.stats.min_I < 0.0) return out;
  if (c_.p() < 1.0 && I.min() > 0.0 && out.stats.min_I <= 0.0) return out;

  double lhs = 0.0, rhs = 0.0, total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lhs += w[k] * ((S1[k] - S[k]) + (I1[k] - I[k])) / dt;
    rhs += w[k] * (lambda[k] - S1[k] - eta[k] * I1[k]);
    total += w[k] * lambda[k];
  }
  out.stats.mass_defect = std::abs(lhs - rhs) / total;
  out.accepted = true;
  return out;
}

StepOutcome step_imex(const SimState& state, const CoefficientSet& c, double dt) {
  return ImexStepper(c).step(state, dt);
}

void StopRule::validate() const {
  if (!std::isfinite(t_final) && !(steady_tol > 0.0))
    throw ConfigError("stopping rule needs a finite t_final or a positive steady_tol");
  if (!(dt_min > 0.0) || !(dt_max >= dt_min) || !(dt0 > 0.0))
    throw ConfigError("invalid time step bounds");
  if (!(growth >= 1.0)) throw ConfigError("dt growth factor must be >= 1");
}

Snapshot take_snapshot(const SimState& s) {
  Snapshot snap;
  snap.t = s.t;
  ScalarField total = s.S;
  for (std::size_t k = 0; k < total.size(); ++k) total[k] += s.I[k];
  snap.mass = integrate(total);
  snap.min_S = s.S.min();
  snap.max_S = s.S.max();
  snap.min_I = s.I.min();
  snap.max_I = s.I.max();
  return snap;
}

void validate_state(const SimState& s, const CoefficientSet& c, bool strict_infection) {
  s.S.require_same_domain(c.beta());
  s.I.require_same_domain(c.beta());
  if (!s.S.all_finite() || !s.I.all_finite()) throw ConfigError("initial data must be finite");
  if (!(s.S.min() > 0.0)) throw ConfigError("initial S must be positive at every node");
  if (s.I.min() < 0.0) throw ConfigError("initial I must be nonnegative");
  if (strict_infection && c.p() < 1.0 && !(s.I.min() > 0.0))
    throw ConfigError("initial I must be positive at every node when p < 1");
}

RunResult run(SimState state, const CoefficientSet& c, const StopRule& stop,
              const SnapshotHook& hook) {
  stop.validate();
  validate_state(state, c, false);
  ImexStepper stepper(c, stop.solver_tol);

  RunResult res;
  res.snapshots.push_back(take_snapshot(state));
  double dt = std::min(stop.dt0, stop.dt_max);
  while (res.steps < stop.max_steps) {
    if (state.t >= stop.t_final) break;
    double h = std::min(dt, stop.t_final - state.t);
    StepOutcome o = stepper.step(state, h);
    if (!o.accepted) {
      ++res.rejected;
      dt = 0.5 * h;
      if (dt < stop.dt_min)
        throw ComputeError("time step underflow at t=" + format_double(state.t) +
                           " (stiff or invalid configuration)");
      continue;
    }
    double change = 0.0;
    for (std::size_t k = 0; k < state.S.size(); ++k) {
      change = std::max(change, std::abs(o.state.S[k] - state.S[k]));
      change = std::max(change, std::abs(o.state.I[k] - state.I[k]));
    }
    res.change_rate = change / h;
    res.max_mass_defect = std::max(res.max_mass_defect, o.stats.mass_defect);
    state = std::move(o.state);
    ++res.steps;
    if (stop.snapshot_every > 0 && res.steps % stop.snapshot_every == 0) {
      res.snapshots.push_back(take_snapshot(state));
      if (hook) hook(state, res.steps);
    }
    if (stop.steady_tol > 0.0 && res.change_rate < stop.steady_tol) {
      res.steady = true;
      break;
    }
    if (h == dt) dt = std::min(dt * stop.growth, stop.dt_max);
  }
  res.dt = dt;
  res.snapshots.push_back(take_snapshot(state));
  res.state = std::move(state);
  return res;
}

}  // namespace sisrd
