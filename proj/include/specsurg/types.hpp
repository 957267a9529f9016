#pragma once
/**
 * @file types.hpp
 * @brief Shared aliases, error types, and small numeric helpers used across the library.
 */

#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specsurg {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Thrown when an input violates a documented precondition (CLI exit code 1).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a numerical procedure cannot meet its accuracy contract (CLI exit code 2).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rank decision attached to every SVD-based operation.
struct RankInfo {
  int rank = 0;
  std::vector<double> singular_values;  ///< nonincreasing
  double tolerance_used = 0.0;
};

/// (M + M†)/2 — the hermitian part of a square matrix.
inline CMat hermitize(const CMat& M) { return 0.5 * (M + M.adjoint()); }

/// Operator (spectral) norm = largest singular value.
double op_norm(const CMat& M);

/// True when every entry of M is finite.
bool all_finite(const CMat& M);

/// Composite-Simpson integral of matrix samples on a uniform grid (odd node count required).
CMat simpson(const std::vector<CMat>& f, double h);

/// Running integral c[i] = ∫_{x0}^{xi} via corrected trapezoid (uses the sample derivatives,
/// O(h^4) accurate): c[i+1] = c[i] + h/2·(f_i + f_{i+1}) − h²/12·(df_{i+1} − df_i).
std::vector<CMat> running_integral(const std::vector<CMat>& f,
                                   const std::vector<CMat>& df, double h);

/// Uniform grid 0..x_end with step ≈ h_target, adjusted so the node count is odd
/// (composite-Simpson friendly). Always contains at least 3 nodes.
std::vector<double> uniform_grid(double x_end, double h_target);

/// %.17g formatting — round-trip exact for IEEE doubles, locale independent.
std::string fmt17(double v);

}  // namespace specsurg
