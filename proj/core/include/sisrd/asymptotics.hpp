#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sisrd/coefficients.hpp"
#include "sisrd/equilibrium.hpp"

namespace sisrd {

/// Root of an increasing scalar map by bisection: returns t in [lo, hi]
/// with f(t) = target to full double resolution. Throws ComputeError when
/// the bracket does not straddle the target.
template <class F>
double solve_increasing(F&& f, double lo, double hi, double target) {
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  if (flo > 0.0 || fhi < 0.0) throw ComputeError("bisection bracket does not straddle the root");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  for (int it = 0; it < 2100; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid) - target;
    if (fm == 0.0) return mid;
    (fm < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

enum class Regime { DIToZero, DSToZero, BothToZero };
std::string_view regime_name(Regime r);

/// Predicted small-diffusion limit. Either a pair of fields or, where only
/// sets are known, node masks plus envelope fields.
struct LimitProfile {
  Regime regime = Regime::DIToZero;
  std::optional<ScalarField> S;
  std::optional<ScalarField> I;
  std::map<std::string, NodeMask> masks;
  std::map<std::string, ScalarField> fields;
  std::map<std::string, double> meta;
  double sigma = std::numeric_limits<double>::quiet_NaN();

  bool has_fields() const { return S.has_value() && I.has_value(); }
};

/// d_I -> 0 with p = 1: masks "omega_tilde" = {S̃ > h^{1/q}} and
/// "vanishing" = {S̃ < h^{1/q}}, fields "dfe" and "ceiling" = h^{1/q}, and
/// meta "no_ee_small_dI" = 1 when omega_tilde is empty.
LimitProfile classify_dI0_p1(const CoefficientSet& c);

/// d_I -> 0 with 0 < p < 1: S_* solves d_S ΔS + Λ - S - η(S^q/h)^{1/(1-p)} = 0
/// and I_* = (S_*^q/h)^{1/(1-p)}. Meta "residual" holds the elliptic residual.
LimitProfile limit_dI0_plt1(const CoefficientSet& c, double tol = 1e-10);

/// Susceptible level s > 0 with Λ - s - β s^q I^p + γ I = 0.
double eliminate_susceptible(double lambda, double beta, double gamma, double q, double p,
                             double I);

/// d_S -> 0: I_* solves -d_I ΔI = β S_*^q I^p - (γ+η) I with S_* eliminated
/// pointwise. For p = 1 requires λ0 < 0 (ConfigError otherwise).
LimitProfile limit_dS0(const CoefficientSet& c, double tol = 1e-10);

/// Both rates -> 0 with d_I/d_S -> σ, p = 1. For σ >= η_max the profile is
/// (min{Λ, h^{1/q}}, (Λ - h^{1/q})_+/η); the bound envelopes are always
/// emitted as fields.
LimitProfile limit_both_p1(const CoefficientSet& c, double sigma);

/// Both rates -> 0, 0 < p < 1, σ > η_max: I* solves
/// Λ - η I - h^{1/q} I^{(1-p)/q} = 0 per node, S* = h^{1/q} I*^{(1-p)/q}.
LimitProfile limit_both_plt1(const CoefficientSet& c, double sigma);

enum class Direction { Increasing, Decreasing };

struct MonotoneSequence {
  Direction direction = Direction::Increasing;
  std::vector<ScalarField> u;
  std::vector<ScalarField> v;
  /// Limit pair from the limit equation (closed form or per-node bisection).
  ScalarField limit_u;
  ScalarField limit_v;
  /// ||v_{n+1} - v_n||_inf per step.
  std::vector<double> gaps;
  bool converged = false;

  /// Componentwise monotone in the declared direction within `slack`.
  bool is_monotone(double slack = 1e-12) const;
  /// Sup distance of the last iterate to the limit pair.
  double final_error() const;
};

/// Sub/super sequence for 0 < p < 1 with σ > η_max. Iterates until the
/// sup gap drops below `tol` or n_max steps.
MonotoneSequence monotone_seq_plt1(const CoefficientSet& c, double sigma, std::size_t n_max,
                                   Direction dir, double tol = 1e-12);

/// Sub/super sequence for p = 1 with σ > η_max.
MonotoneSequence monotone_seq_p1(const CoefficientSet& c, double sigma, std::size_t n_max,
                                 Direction dir, double tol = 1e-12);

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // distance on the admissible side; >= -tol passes
  bool passed = false;
};

struct AuditReport {
  double tol_grid = 0.0;
  std::optional<double> c0;
  std::vector<BoundCheck> checks;
  bool all_passed() const;
};

/// Unique positive root of c + c^q = Λ_min / (1 + (d_S/d_I + 1/η_min)^p Λ_max^p β_max).
double susceptible_floor_c0(const CoefficientSet& c);

/// A priori bounds for an endemic equilibrium: S bounds for p = 1; I
/// bounds, S/I maxima through w = d_S S + d_I I, and the c0 lower bound
/// for p < 1. Throws ConfigError if `e` is not endemic.
AuditReport bounds_audit(const CoefficientSet& c, const EquilibriumResult& e);

/// Pointwise infected density (d_S Δh^{1/q} + Λ - h^{1/q})/η expected on the
/// coincidence set, with Δ the discrete Laplacian.
ScalarField coincidence_density(const CoefficientSet& c);

/// {h^{1/q} - S < δ}.
NodeMask risk_indicator(const CoefficientSet& c, const ScalarField& S, double delta);

/// {|S - h^{1/q}| < δ}.
NodeMask coincidence_mask(const CoefficientSet& c, const ScalarField& S, double delta);

}  // namespace sisrd
