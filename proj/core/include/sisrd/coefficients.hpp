#pragma once

#include "sisrd/grid.hpp"

namespace sisrd {

/// Spatial rates of the SIS system plus the scalar parameters.
///
///   S_t = d_S ΔS + Λ - S - β S^q I^p + γ I
///   I_t = d_I ΔI + β S^q I^p - (γ + η) I
///
/// All four fields are strictly positive; 0 < p <= 1; q > 0.
class CoefficientSet {
 public:
  CoefficientSet(ScalarField beta, ScalarField gamma, ScalarField eta, ScalarField lambda,
                 double d_S, double d_I, double p, double q);

  /// Spatially constant coefficients on `dom`.
  static CoefficientSet constant(DomainPtr dom, double beta, double gamma, double eta,
                                 double lambda, double d_S, double d_I, double p, double q);

  const DomainPtr& domain() const noexcept { return beta_.domain(); }
  const ScalarField& beta() const noexcept { return beta_; }
  const ScalarField& gamma() const noexcept { return gamma_; }
  const ScalarField& eta() const noexcept { return eta_; }
  const ScalarField& lambda() const noexcept { return lambda_; }
  double d_S() const noexcept { return d_S_; }
  double d_I() const noexcept { return d_I_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }

  /// Copy with different diffusion rates.
  CoefficientSet with_diffusion(double d_S, double d_I) const;

  /// Risk function h = (γ + η)/β.
  ScalarField risk() const;
  /// r = γ/β.
  ScalarField recovery_ratio() const;
  /// h^{1/q}.
  ScalarField risk_root() const;

  /// β S^q I^p at one node; I^p is taken as 0 when I <= 0.
  double incidence(std::size_t k, double S, double I) const;

 private:
  void validate() const;

  ScalarField beta_, gamma_, eta_, lambda_;
  double d_S_, d_I_, p_, q_;
};

}  // namespace sisrd
