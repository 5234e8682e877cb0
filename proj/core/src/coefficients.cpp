#include "sisrd/coefficients.hpp"

#include <cmath>

namespace sisrd {

CoefficientSet::CoefficientSet(ScalarField beta, ScalarField gamma, ScalarField eta,
                               ScalarField lambda, double d_S, double d_I, double p, double q)
    : beta_(std::move(beta)),
      gamma_(std::move(gamma)),
      eta_(std::move(eta)),
      lambda_(std::move(lambda)),
      d_S_(d_S),
      d_I_(d_I),
      p_(p),
      q_(q) {
  validate();
}

CoefficientSet CoefficientSet::constant(DomainPtr dom, double beta, double gamma, double eta,
                                        double lambda, double d_S, double d_I, double p, double q) {
  return CoefficientSet(ScalarField(dom, beta), ScalarField(dom, gamma), ScalarField(dom, eta),
                        ScalarField(dom, lambda), d_S, d_I, p, q);
}

void CoefficientSet::validate() const {
  beta_.require_same_domain(gamma_);
  beta_.require_same_domain(eta_);
  beta_.require_same_domain(lambda_);
  auto positive = [](const ScalarField& f, const char* name) {
    for (double v : f.values())
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string("coefficient ") + name + " must be positive and finite");
  };
  positive(beta_, "beta");
  positive(gamma_, "gamma");
  positive(eta_, "eta");
  positive(lambda_, "Lambda");
  if (!(d_S_ > 0.0) || !(d_I_ > 0.0)) throw ConfigError("diffusion rates must be positive");
  if (!(p_ > 0.0) || p_ > 1.0) throw ConfigError("p must lie in (0, 1]");
  if (!(q_ > 0.0)) throw ConfigError("q must be positive");
}

CoefficientSet CoefficientSet::with_diffusion(double d_S, double d_I) const {
  return CoefficientSet(beta_, gamma_, eta_, lambda_, d_S, d_I, p_, q_);
}

ScalarField CoefficientSet::risk() const {
  ScalarField h(domain());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = (gamma_[k] + eta_[k]) / beta_[k];
  return h;
}

ScalarField CoefficientSet::recovery_ratio() const {
  ScalarField r(domain());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = gamma_[k] / beta_[k];
  return r;
}

ScalarField CoefficientSet::risk_root() const {
  ScalarField h = risk();
  if (q_ != 1.0)
    for (double& v : h.data()) v = std::pow(v, 1.0 / q_);
  return h;
}

double CoefficientSet::incidence(std::size_t k, double S, double I) const {
  if (I <= 0.0 || S <= 0.0) return 0.0;
  double sq = q_ == 1.0 ? S : std::pow(S, q_);
  double ip = p_ == 1.0 ? I : std::pow(I, p_);
  return beta_[k] * sq * ip;
}

}  // namespace sisrd
