#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sisrd/grid.hpp"

namespace sisrd {

struct SolveReport {
  std::size_t iterations = 0;
  double residual = 0.0;  // ||Ax - b||_2 / ||b||_2
  bool converged = false;  // residual <= tol
  /// Residual could not drop further: it sits at the rounding floor
  /// 16 eps ||(|A||x| + |b|)||/||b||, which exceeds tol.
  bool at_rounding_floor = false;

  /// converged, or as accurate as floating point allows.
  bool usable() const noexcept { return converged || at_rounding_floor; }
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

/// Jacobi-preconditioned conjugate gradients for SPD A.
///
/// Stops when ||Ax-b||/||b|| <= tol or after max_iter iterations
/// (0 means 10*n), restarting from the true residual when the recursive one
/// drifts or until the residual reaches the rounding floor. A final Galerkin correction along the constant vector
/// makes 1^T(Ax-b) vanish to rounding, which keeps mass identities exact
/// even when the iteration stops early. `guess` (optional) seeds x.
SolveResult spd_solve(const SparseOperator& A, std::span<const double> b, double tol,
                      std::span<const double> guess = {}, std::size_t max_iter = 0);

struct EigenResult {
  double value = 0.0;
  std::vector<double> vector;  // sup-norm 1, nonnegative
  double residual = 0.0;       // ||A phi - mu B phi|| / ||B phi||
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;  // A == 0
};

/// Largest mu with A phi = mu B phi, for A symmetric nonnegative and B SPD
/// with a nonnegative inverse (an M-matrix), by power iteration on B^{-1}A
/// started from the constant vector.
EigenResult generalized_principal_eigenpair(const SparseOperator& A, const SparseOperator& B,
                                            double tol, std::size_t max_iter = 20000);

/// Diagonal matrix as a sparse operator.
SparseOperator diagonal_operator(std::span<const double> d);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace sisrd
