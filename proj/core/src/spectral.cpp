#include "sisrd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sisrd/equilibrium.hpp"
#include "sisrd/linalg.hpp"

namespace sisrd {

namespace {

SpectralResult wrap(const CoefficientSet& c, EigenResult r) {
  SpectralResult s;
  s.eigenvalue = r.value;
  s.eigenfield = ScalarField(c.domain(), std::move(r.vector));
  s.residual = r.residual;
  s.iterations = r.iterations;
  s.converged = r.converged;
  s.degenerate = r.degenerate;
  s.d_S = c.d_S();
  s.d_I = c.d_I();
  return s;
}

}  // namespace

SpectralResult compute_R0(const CoefficientSet& c, double tol) {
  if (c.p() != 1.0) throw ConfigError("R0 is defined only for p = 1");
  const auto& dom = *c.domain();
  const auto& w = dom.measure();
  ScalarField dfe = solve_dfe(c);
  std::vector<double> infect(dom.size()), removal(dom.size());
  for (std::size_t k = 0; k < dom.size(); ++k) {
    infect[k] = w[k] * c.beta()[k] * std::pow(dfe[k], c.q());
    removal[k] = c.gamma()[k] + c.eta()[k];
  }
  auto lap = assemble_neumann_laplacian(dom);
  auto A = diagonal_operator(infect);
  auto B = shifted_stiffness(lap.stiffness, w, removal, c.d_I());
  auto r = generalized_principal_eigenpair(A, B, tol);
  if (!r.converged)
    throw ComputeError("R0 power iteration did not converge (residual " +
                       format_double(r.residual) + ")");
  return wrap(c, std::move(r));
}

SpectralResult compute_lambda0(const CoefficientSet& c, double tol) {
  const auto& dom = *c.domain();
  const auto& w = dom.measure();
  std::vector<double> potential(dom.size());
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dom.size(); ++k) {
    potential[k] = c.beta()[k] * std::pow(c.lambda()[k], c.q()) - c.gamma()[k] - c.eta()[k];
    vmax = std::max(vmax, potential[k]);
  }
  // H = d_I(-K) - M V has spectrum >= -max V, so H + s M with s = max V + 1
  // is an SPD M-matrix; the top eigenvalue ν of M φ = ν (H + s M) φ gives
  // λ0 = 1/ν - s.
  const double shift = vmax + 1.0;
  std::vector<double> diag(dom.size());
  for (std::size_t k = 0; k < dom.size(); ++k) diag[k] = shift - potential[k];
  auto lap = assemble_neumann_laplacian(dom);
  auto B = shifted_stiffness(lap.stiffness, w, diag, c.d_I());
  auto A = diagonal_operator(w);
  auto r = generalized_principal_eigenpair(A, B, tol);
  if (!r.converged)
    throw ComputeError("lambda0 inverse iteration did not converge (residual " +
                       format_double(r.residual) + ")");
  double nu = r.value;
  auto s = wrap(c, std::move(r));
  s.eigenvalue = 1.0 / nu - shift;
  return s;
}

double pointwise_R0_sup(const CoefficientSet& c) {
  ScalarField dfe = solve_dfe(c);
  double m = 0.0;
  for (std::size_t k = 0; k < dfe.size(); ++k)
    m = std::max(m, c.beta()[k] * std::pow(dfe[k], c.q()) / (c.gamma()[k] + c.eta()[k]));
  return m;
}

}  // namespace sisrd
