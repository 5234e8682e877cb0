#include "sisrd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sisrd {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

SparseOperator diagonal_operator(std::span<const double> d) {
  SparseOperator A;
  A.n = d.size();
  A.row_ptr.resize(A.n + 1);
  for (std::size_t i = 0; i <= A.n; ++i) A.row_ptr[i] = i;
  A.col.resize(A.n);
  for (std::size_t i = 0; i < A.n; ++i) A.col[i] = i;
  A.val.assign(d.begin(), d.end());
  return A;
}

namespace {

void residual(const SparseOperator& A, std::span<const double> x, std::span<const double> b,
              std::vector<double>& r) {
  A.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

}  // namespace

namespace {

/// Residual level reachable in floating point: 16 eps ||(|A||x| + |b|)|| / ||b||.
double rounding_floor(const SparseOperator& A, std::span<const double> x,
                      std::span<const double> b, double bnorm) {
  std::vector<double> s(A.n, 0.0);
  for (std::size_t i = 0; i < A.n; ++i) {
    double acc = std::abs(b[i]);
    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      acc += std::abs(A.val[k] * x[A.col[k]]);
    s[i] = acc;
  }
  return 16.0 * std::numeric_limits<double>::epsilon() * norm2(s) / bnorm;
}

}  // namespace

SolveResult spd_solve(const SparseOperator& A, std::span<const double> b, double tol,
                      std::span<const double> guess, std::size_t max_iter) {
  const std::size_t n = A.n;
  if (b.size() != n) throw DomainMismatch();
  if (max_iter == 0) max_iter = 10 * std::max<std::size_t>(n, 1);

  SolveResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    out.report.converged = true;
    return out;
  }
  if (guess.size() == n) std::copy(guess.begin(), guess.end(), out.x.begin());

  std::vector<double> inv_diag = A.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw ComputeError("spd_solve: non-positive diagonal entry");
    d = 1.0 / d;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  auto& x = out.x;
  std::size_t it = 0;
  double rel = 0.0;
  // Restart from the true residual whenever the recursive one has drifted.
  for (int pass = 0; pass < 8 && it < max_iter; ++pass) {
    residual(A, x, b, r);
    rel = norm2(r) / bnorm;
    if (rel <= tol || rel <= rounding_floor(A, x, b, bnorm)) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (it < max_iter) {
      ++it;
      A.apply(p, q);
      double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      if (norm2(r) / bnorm <= tol) break;
      if (it % 200 == 0) residual(A, x, b, r);
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      double rz_new = dot(r, z);
      double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }

  // Galerkin correction along the constant vector.
  residual(A, x, b, r);
  std::vector<double> ones(n, 1.0);
  A.apply(ones, q);
  double denom = 0.0, num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    denom += q[i];
    num += r[i];
  }
  if (denom > 0.0) {
    double shift = num / denom;
    std::vector<double> trial = x;
    for (double& v : trial) v += shift;
    std::vector<double> r2(n);
    residual(A, trial, b, r2);
    double rel2 = norm2(r2) / bnorm;
    if (rel2 <= std::max(tol, norm2(r) / bnorm)) {
      x = std::move(trial);
      r = std::move(r2);
    }
  }
  out.report.iterations = it;
  out.report.residual = norm2(r) / bnorm;
  out.report.converged = out.report.residual <= tol;
  out.report.at_rounding_floor =
      !out.report.converged && out.report.residual <= rounding_floor(A, x, b, bnorm);
  return out;
}

EigenResult generalized_principal_eigenpair(const SparseOperator& A, const SparseOperator& B,
                                            double tol, std::size_t max_iter) {
  const std::size_t n = A.n;
  if (B.n != n) throw DomainMismatch();
  EigenResult res;
  res.vector.assign(n, 1.0);
  if (std::all_of(A.val.begin(), A.val.end(), [](double v) { return v == 0.0; })) {
    res.degenerate = true;
    res.converged = true;
    return res;
  }

  const double inner_tol = std::min(1e-13, 1e-3 * tol);
  std::vector<double> phi(n, 1.0), Aphi(n), Bpsi(n), Apsi(n), r(n);
  std::vector<double> psi;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    A.apply(phi, Aphi);
    auto solve = spd_solve(B, Aphi, inner_tol, psi);
    psi = std::move(solve.x);
    A.apply(psi, Apsi);
    B.apply(psi, Bpsi);
    double mu = dot(psi, Apsi) / dot(psi, Bpsi);
    for (std::size_t i = 0; i < n; ++i) r[i] = Apsi[i] - mu * Bpsi[i];
    double rel = norm2(r) / norm2(Bpsi);
    double scale = norm_inf(psi);
    if (!(scale > 0.0) || !std::isfinite(mu)) throw ComputeError("power iteration broke down");
    // psi stays nonnegative; keep its orientation positive.
    double sign = *std::max_element(psi.begin(), psi.end()) >= scale ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) phi[i] = sign * psi[i] / scale;
    // Warm start for the next inner solve: B^{-1} A phi ~ mu phi.
    for (std::size_t i = 0; i < n; ++i) psi[i] = mu * phi[i];
    res.value = mu;
    res.residual = rel;
    res.iterations = it;
    if (rel <= tol) {
      res.converged = true;
      break;
    }
  }
  res.vector = phi;
  return res;
}

}  // namespace sisrd
