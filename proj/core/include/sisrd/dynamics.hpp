#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "sisrd/coefficients.hpp"
#include "sisrd/grid.hpp"

namespace sisrd {

struct SimState {
  ScalarField S;
  ScalarField I;
  double t = 0.0;
};

struct StepStats {
  double dt = 0.0;
  /// |Σ(ΔS+ΔI)w/dt - Σ(Λ - S' - ηI')w| / ΣΛw
  double mass_defect = 0.0;
  double min_S = 0.0;
  double min_I = 0.0;
  std::size_t rejected = 0;
};

struct StepOutcome {
  bool accepted = false;
  SimState state;
  StepStats stats;
};

/// One IMEX Euler step of the SIS system.
///
/// Diffusion and the linear sinks (-S, -ηI) are implicit; incidence and
/// recovery are explicit at level n in both equations, so they cancel in the
/// summed balance and the discrete mass identity holds to solver precision.
/// A step whose S has a non-positive node, whose I has a negative node, or
/// whose I loses strict positivity when p < 1 is rejected. Negative I entries
/// within solver_tol * ||I'||_inf are set to zero first.
class ImexStepper {
 public:
  explicit ImexStepper(const CoefficientSet& c, double solver_tol = 1e-12);

  StepOutcome step(const SimState& state, double dt) const;

  const CoefficientSet& coefficients() const noexcept { return c_; }
  const NeumannLaplacian& laplacian() const noexcept { return lap_; }

 private:
  CoefficientSet c_;
  NeumannLaplacian lap_;
  double solver_tol_;
};

StepOutcome step_imex(const SimState& state, const CoefficientSet& c, double dt);

struct StopRule {
  double t_final = std::numeric_limits<double>::infinity();
  /// Stop when ||(S'-S, I'-I)||_inf / dt < steady_tol; 0 disables.
  double steady_tol = 0.0;
  double dt0 = 0.01;
  double dt_max = 0.1;
  double dt_min = 1e-9;
  double growth = 1.1;
  std::size_t max_steps = 50'000'000;
  /// Record a snapshot every k accepted steps (0: only first and last).
  std::size_t snapshot_every = 0;
  double solver_tol = 1e-12;

  void validate() const;
};

struct Snapshot {
  double t = 0.0;
  double mass = 0.0;  // ∫(S + I)
  double min_S = 0.0, max_S = 0.0;
  double min_I = 0.0, max_I = 0.0;
};

struct RunResult {
  SimState state;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  bool steady = false;
  double change_rate = 0.0;  // last ||Δ||_inf / dt
  double max_mass_defect = 0.0;
  double dt = 0.0;           // step size at exit
  std::vector<Snapshot> snapshots;
};

using SnapshotHook = std::function<void(const SimState&, std::size_t step)>;

/// March with adaptive dt (halve on rejection, grow by `growth` on
/// acceptance up to dt_max) until t_final or steady state. Throws
/// ComputeError when dt falls below dt_min.
RunResult run(SimState state, const CoefficientSet& c, const StopRule& stop,
              const SnapshotHook& hook = {});

Snapshot take_snapshot(const SimState& s);

/// Checks S > 0, I >= 0 (I > 0 when p < 1 and `strict_infection`), finite.
void validate_state(const SimState& s, const CoefficientSet& c, bool strict_infection);

}  // namespace sisrd
