#pragma once

#include "sisrd/coefficients.hpp"

namespace sisrd {

struct SpectralResult {
  double eigenvalue = 0.0;
  ScalarField eigenfield;  // sup-norm 1, nonnegative
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;
  double d_S = 0.0;
  double d_I = 0.0;
};

/// Basic reproduction number (p = 1 only):
///   R0 = sup ∫βS̃^q φ² / ∫(d_I|∇φ|² + (γ+η)φ²),
/// the largest eigenvalue of M(βS̃^q) φ = μ (d_I(-K) + M(γ+η)) φ.
/// Throws ConfigError when p != 1.
SpectralResult compute_R0(const CoefficientSet& c, double tol = 1e-10);

/// Principal eigenvalue λ0 of d_I Δφ + (βΛ^q - γ - η)φ + λφ = 0 with
/// no-flux boundary; λ0 < 0 means the infection invades for small d_S.
SpectralResult compute_lambda0(const CoefficientSet& c, double tol = 1e-10);

/// max over nodes of βS̃^q/(γ+η): the d_I -> 0 limit of R0.
double pointwise_R0_sup(const CoefficientSet& c);

}  // namespace sisrd
