#pragma once
/**
 * @file matops.hpp
 * @brief Dense complex-matrix utilities: Moore–Penrose pseudoinverse, kernel and range
 *        projections, hermitian positive (inverse) square roots, and the derivative rule
 *        for the pseudoinverse of a monotone kernel family.
 *
 * All operations are pure functions on immutable inputs and safe to call concurrently.
 */

#include "specsurg/types.hpp"

namespace specsurg {

/// Default SVD rank tolerance: n · σ_max · 1e−12.
double default_rank_tol(const CMat& M);

/// Moore–Penrose pseudoinverse. Singular values ≤ tol count as zero; tol ≤ 0 selects the
/// default. All four defining residuals (M M⁺ M = M, M⁺ M M⁺ = M⁺, hermiticity of M M⁺
/// and M⁺ M) hold to ≤ 10·tol in operator norm.
CMat pinv(const CMat& M, double tol = -1.0, RankInfo* info = nullptr);

/// Orthogonal projection onto Ker(M) (right null space): Q² = Q = Q†, ‖M·Q‖ ≤ 10·tol·‖M‖.
/// info.rank is the rank of M under the tolerance actually used.
std::pair<CMat, RankInfo> kernel_projection(const CMat& M, double tol = -1.0);

/// Orthogonal projection onto Range(M) (column space).
std::pair<CMat, RankInfo> range_projection(const CMat& M, double tol = -1.0);

/// Hermitian positive square root R with R·R = M to 1e−12 relative residual.
/// Input must be hermitian (asymmetry ≤ 1e−10 relative, symmetrized internally)
/// and positive definite; violations raise NumericalError.
CMat sqrt_pos(const CMat& M);

/// Hermitian positive R with R·R = M⁻¹; same preconditions as sqrt_pos.
CMat inv_sqrt_pos(const CMat& M);

/// W⁺·integrand·W⁺ — the x-derivative of W(x)⁺ for a kernel family with
/// W′(x) = −integrand(x) and x-independent rank (the sign flips with W′ = +integrand).
CMat pinv_derivative(const CMat& Wplus, const CMat& integrand);

/// σ_max / σ_min; +inf when the matrix is singular to working precision.
double cond_number(const CMat& M);

/// Largest of the four Moore–Penrose defining residuals of the pair (M, Mp), operator norm.
double penrose_residual(const CMat& M, const CMat& Mp);

}  // namespace specsurg
