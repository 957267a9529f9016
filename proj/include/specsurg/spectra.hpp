#pragma once
/**
 * @file spectra.hpp
 * @brief Bound-state analysis: locating the discrete spectrum through the Jost
 *        matrix, and the normalization matrices coupling the regular and Jost
 *        descriptions of each bound state.
 *
 * A bound state at k = iκ (energy −κ²) appears as a nontrivial kernel of J(iκ).
 * Its orthogonal data are two projections — Q onto the boundary-side directions
 * (kernel of J(iκ)) and P onto the decay-side directions (range-side image) —
 * linked by a dependency matrix D with D†D = Q, DD† = P, and two positive
 * normalization matrices C (regular side) and M (Jost side) built from the
 * L² integrals of the corresponding solution columns.
 */

#include <vector>

#include "specsurg/solver.hpp"

namespace specsurg {

/// Complete orthogonal data of a single bound state.
struct BoundState {
  double kappa = 0.0;  ///< decay rate; energy is −κ²
  int m = 0;           ///< multiplicity = dim Ker J(iκ)
  CMat Q;              ///< projection onto Ker J(iκ) (regular side)
  CMat P;              ///< projection onto the Jost-side directions
  CMat C;              ///< regular-side normalization: C = H⁻¹ᐟ²Q, ∫ (φC)†(φC) = Q
  CMat M;              ///< Jost-side normalization:   M = B⁻¹ᐟ²P, ∫ (fM)†(fM) = P
  CMat D;              ///< dependency matrix: φ(iκ)C = f(iκ)MD·…, D†D = Q, DD† = P
  CMat Hj;             ///< H = I − Q + G with G = ∫ (φQ)†(φQ)
  CMat Bj;             ///< B = I − P + Aj with Aj = ∫ (fP)†(fP)
};

struct Spectrum {
  std::vector<BoundState> states;
};

/// Scan σ_min(J(iκ)) over (0, kappa_max] and refine each dip to locate bound
/// states; kappa_max ≤ 0 selects the default 1 + ∫‖V‖. Located κ are accurate
/// to better than 1e−9. Near-degenerate pairs raise NumericalError.
Spectrum find_bound_states(const Problem& p, double kappa_max = -1.0,
                           int scan_points = 200,
                           SolverOptions opts = SolverOptions::defaults());

/// Regular-side normalization for decay rate κ and kernel projection Q:
/// returns (C, H) with H = I − Q + ∫ (φQ)†(φQ), C = H⁻¹ᐟ²Q, HQ = QH.
std::pair<CMat, CMat> gl_normalization(const Problem& p, double kappa, const CMat& Q,
                                       SolverOptions opts = SolverOptions::defaults());

/// Jost-side normalization for decay rate κ and projection P:
/// returns (M, B) with B = I − P + ∫ (fP)†(fP), M = B⁻¹ᐟ²P.
std::pair<CMat, CMat> marchenko_normalization(const Problem& p, double kappa,
                                              const CMat& P,
                                              SolverOptions opts = SolverOptions::defaults());

/// Dependency matrix D with φ(iκ)C = f(iκ)MD pointwise, D†D = Q, DD† = P, D⁺ = D†.
CMat dependency_matrix(const Problem& p, const BoundState& s,
                       SolverOptions opts = SolverOptions::defaults());

/// Assemble the full bound-state data at a located decay rate κ.
BoundState analyze_state(const Problem& p, double kappa,
                         SolverOptions opts = SolverOptions::defaults());

}  // namespace specsurg
