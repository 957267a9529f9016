#pragma once
/**
 * @file solver.hpp
 * @brief Matrix Schrödinger solutions on the half line: the regular solution with
 *        boundary data (A, B), the Jost solution normalized to e^{ikx}·I at infinity,
 *        an exponentially growing companion solution, and the Jost / scattering
 *        matrices built from their boundary values.
 *
 * All integrations run on an exponentially twisted first-order system whose state
 * stays O(1) along the stable direction, so solutions at k on the positive imaginary
 * axis (bound-state analysis) keep uniform relative accuracy:
 *   regular:  (p, q) = e^{+ikx} (ψ, ψ′), integrated forward from x = 0;
 *   Jost:     (v, w) = e^{−ikx} (ψ, ψ′), integrated backward from beyond the support.
 * Variants with an accumulated integral carry ∫ (ψθ)†(ψθ) dx alongside the state,
 * evaluated in untwisted variables so the running integral is exact in scale.
 */

#include <vector>

#include "specsurg/potential.hpp"
#include "specsurg/types.hpp"

namespace specsurg {

struct SolverOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  /// Default tolerances; the SPECSURG_TOL environment variable, when set to a
  /// positive number, overrides rel_tol (abs_tol follows at 1/100 of it).
  static SolverOptions defaults();
};

/// A matrix solution sampled on the requested nodes.
struct MatrixSolution {
  cplx k{};
  std::vector<double> xs;
  std::vector<CMat> psi;
  std::vector<CMat> psi_prime;
  /// Running integral ∫ (ψθ)†(ψθ) (only the *_with_integral variants fill this):
  /// from 0 for the regular family, from the far end for the Jost family.
  std::vector<CMat> cum;
};

struct ScatteringResult {
  double k = 0.0;
  CMat S;        ///< S(k) = −J(−k) J(k)⁻¹
  CMat J_plus;   ///< J(k)
  CMat J_minus;  ///< J(−k)
  double cond_J = 0.0;
};

/// φ(k, ·) with φ(0) = A, φ′(0) = B; xs must start at 0 and increase strictly.
MatrixSolution regular_solution(const Problem& p, cplx k, std::vector<double> xs,
                                SolverOptions opts = SolverOptions::defaults());

/// Regular solution carrying cum(x) = cum_at_zero + ∫₀ˣ (φθ)†(φθ) dy.
MatrixSolution regular_solution_with_integral(const Problem& p, cplx k,
                                              std::vector<double> xs, const CMat& theta,
                                              const CMat& cum_at_zero,
                                              SolverOptions opts = SolverOptions::defaults());

/// f(k, ·) ~ e^{ikx} I, integrated backward from beyond the support; Im k ≥ 0.
MatrixSolution jost_solution(const Problem& p, cplx k, std::vector<double> xs,
                             SolverOptions opts = SolverOptions::defaults());

/// Jost solution carrying cum(x) = cum_at_end + ∫ₓ^{xs.back()} (fθ)†(fθ) dy;
/// the caller chooses xs.back() far enough out that V is negligible there.
MatrixSolution jost_solution_with_integral(const Problem& p, cplx k,
                                           std::vector<double> xs, const CMat& theta,
                                           const CMat& cum_at_end,
                                           SolverOptions opts = SolverOptions::defaults());

/// Growing companion g(x) ~ e^{κx}(I + o(1)) at k = iκ: integrated forward (the
/// stable direction for growth) and normalized by its leading coefficient, so the
/// free problem yields e^{κx}·I exactly.
MatrixSolution growing_solution(const Problem& p, double kappa, std::vector<double> xs,
                                SolverOptions opts = SolverOptions::defaults());

/// J(k) = f(−k̄, 0)† B − f′(−k̄, 0)† A; k = 0 is handled by symmetric averaging.
CMat jost_matrix(const Problem& p, cplx k, SolverOptions opts = SolverOptions::defaults());

/// Same as jost_matrix but with a fifth-order fixed-step integration of step h
/// (a convergence-order probe; no error control).
CMat jost_matrix_fixed_step(const Problem& p, cplx k, double h,
                            SolverOptions opts = SolverOptions::defaults());

/// S(k) = −J(−k) J(k)⁻¹ for real k; raises NumericalError when J(k) is singular
/// to working precision (an exceptional point).
ScatteringResult scattering_matrix(const Problem& p, double k,
                                   SolverOptions opts = SolverOptions::defaults());

/// Physical solution Ψ(k, ·) = f(−k, ·) + f(k, ·) S(k) for real k ≠ 0.
MatrixSolution physical_solution(const Problem& p, double k, std::vector<double> xs,
                                 SolverOptions opts = SolverOptions::defaults());

/// Far-end abscissa used for Jost initial data: ‖V‖ ≤ eps beyond it (floor 1).
double solve_x_end(const Problem& p, double eps = 1e-10);

}  // namespace specsurg
