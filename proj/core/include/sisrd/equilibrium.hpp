#pragma once

#include <string>
#include <vector>

#include "sisrd/coefficients.hpp"
#include "sisrd/dynamics.hpp"

namespace sisrd {

struct EeOptions {
  StopRule stop = default_stop();
  /// Damped Newton polish of the elliptic system after the march.
  bool newton = true;
  double newton_tol = 1e-10;
  std::size_t newton_max_iter = 60;

  static StopRule default_stop() {
    StopRule s;
    s.t_final = 2000.0;
    s.steady_tol = 1e-9;
    return s;
  }
};

struct EquilibriumResult {
  ScalarField S;
  ScalarField I;
  /// Sup norms of the two elliptic residuals.
  double residual_S = 0.0;
  double residual_I = 0.0;
  /// |∫(S + ηI) - ∫Λ| / ∫Λ
  double conservation_gap = 0.0;
  bool endemic = false;

  std::size_t march_steps = 0;
  double march_time = 0.0;
  bool march_steady = false;
  double max_mass_defect = 0.0;
  bool newton_applied = false;
  std::size_t newton_iterations = 0;
  std::string note;
};

/// S̃ solving d_S ΔS̃ - S̃ + Λ = 0 with no-flux boundary.
ScalarField solve_dfe(const CoefficientSet& c);

/// (S0, I0) = (0.8, 0.2).
SimState default_initial_state(const DomainPtr& dom);

/// Equilibrium reached from `init` by time marching, optionally polished by
/// Newton. Throws ComputeError if the march neither settles nor yields to
/// Newton.
EquilibriumResult find_ee(const CoefficientSet& c, const SimState& init,
                          const EeOptions& opts = {});

/// Fill residuals, gap and endemic flag of (S, I).
EquilibriumResult evaluate_equilibrium(const CoefficientSet& c, ScalarField S, ScalarField I);

struct EllipticResidual {
  ScalarField S;
  ScalarField I;
};
EllipticResidual elliptic_residual(const CoefficientSet& c, const ScalarField& S,
                                   const ScalarField& I);

double conservation_gap(const CoefficientSet& c, const ScalarField& S, const ScalarField& I);

/// ∫I > 1e-10 |Ω|.
bool is_endemic(const ScalarField& I);

/// 1e-6 + 2h^2.
double grid_tolerance(const DiscreteDomain& dom);

struct ExtremumCheck {
  std::string name;
  std::size_t node = 0;
  double reaction = 0.0;
  double margin = 0.0;  // >= -tol passes
  bool passed = false;
};

struct DiagnosticsReport {
  double conservation_gap = 0.0;
  double residual_S = 0.0;
  double residual_I = 0.0;
  double tol_grid = 0.0;
  std::vector<ExtremumCheck> checks;
  bool all_passed() const;
};

/// Conservation gap, residual norms and extremum sign checks: at a maximum
/// of a field its reaction term is nonnegative, at a minimum nonpositive.
DiagnosticsReport diagnostics(const CoefficientSet& c, const EquilibriumResult& e);

}  // namespace sisrd
