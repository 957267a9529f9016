#pragma once
/**
 * @file surgery.hpp
 * @brief Bound-state surgery: transformations that remove a bound state, lower its
 *        multiplicity, add a new bound state, or raise the multiplicity of an
 *        existing one, while keeping the rest of the scattering data intact.
 *
 * Every operation shares one integral-transform core. A generator Γ(x) built from
 * bound-state solution columns and a positive kernel family (W for contraction,
 * Ω for expansion) produce the transformed potential
 *     Ṽ = V ± 2 d/dx [Γ K⁺ Γ†],
 * the transformed boundary data, and a rational factor carrying the change of the
 * Jost and scattering matrices. Transformed solutions come from closed-form
 * integral expressions in the same data — no re-solving is required, though all
 * identities are verifiable by re-solving the emitted problem.
 */

#include <map>
#include <string>
#include <vector>

#include "specsurg/spectra.hpp"

namespace specsurg {

enum class SurgeryKind { Remove, Decrease, Add, Increase };

std::string surgery_kind_name(SurgeryKind kind);

/// A requested operation (parsed from JSON for the CLI).
struct SurgeryPlan {
  SurgeryKind kind = SurgeryKind::Remove;
  double kappa = 0.0;  ///< decay rate of the targeted / new bound state
  CMat C_new;          ///< add: normalization matrix of the new state
  CMat Q_r;            ///< decrease: kernel directions to remove (≤ state's Q)
  CMat Q_i;            ///< increase: new kernel directions (⊥ state's Q)
  CMat G_i;            ///< increase: optional Gram data for the new directions
};

SurgeryPlan plan_from_json_string(const std::string& text);
std::string plan_to_json_string(const SurgeryPlan& plan);

/// Rational factor describing how the Jost matrix changes:
///   J̃(k) = [I + s·2iκ/(k − s·iκ) P] J(k),   s = +1 contraction, −1 expansion.
struct JostFactor {
  double kappa = 0.0;
  int sign = +1;  ///< +1 remove/decrease, −1 add/increase
  CMat projection;
  int m = 0;  ///< rank of the projection

  CMat eval(cplx k) const;        ///< the factor multiplying J
  CMat scattering(cplx k) const;  ///< the factor framing S on both sides
  cplx det_ratio(cplx k) const;   ///< det J̃ / det J = ((k + s·iκ)/(k − s·iκ))^m
};

/// Full output of one surgery step.
struct SurgeryResult {
  Problem transformed;  ///< emitted grid problem (Ṽ, Ã, B̃)
  JostFactor jost_factor;
  SurgeryKind kind = SurgeryKind::Remove;
  double kappa = 0.0;
  int m = 0;  ///< rank handled by this step

  // Transformation data sampled on the emission grid (uniform, odd node count).
  std::vector<double> xs;
  std::vector<CMat> gen;       ///< generator Γ(x)
  std::vector<CMat> dgen;      ///< Γ′(x)
  std::vector<CMat> ker_plus;  ///< K(x)⁺ (pseudoinverse of the kernel family)
  std::vector<CMat> ker;       ///< K(x)
  CMat C_used;                 ///< normalization matrix consumed by this step
  CMat L;                      ///< expansion only: growing-component coefficient
  Problem source;              ///< the problem the surgery was applied to

  std::map<std::string, double> diagnostics;
};

/// Remove a whole bound state.
SurgeryResult solve_gl_remove(const Problem& p, const BoundState& s,
                              SolverOptions opts = SolverOptions::defaults());

/// Remove only the directions Q_r ≤ Q of a bound state (multiplicity decrease);
/// Q_r = Q performs a full removal.
SurgeryResult solve_gl_decrease(const Problem& p, const BoundState& s, const CMat& Q_r,
                                SolverOptions opts = SolverOptions::defaults());

/// Add a new bound state at decay rate κ with normalization matrix C_new;
/// κ must be distinct from every existing decay rate.
SurgeryResult solve_gl_add(const Problem& p, double kappa_new, const CMat& C_new,
                           SolverOptions opts = SolverOptions::defaults());

/// Raise the multiplicity of the existing state s by the directions Q_i ⊥ Q,
/// with optional Gram data G_i (defaults to Q_i).
SurgeryResult solve_gl_increase(const Problem& p, const BoundState& s, const CMat& Q_i,
                                const CMat& G_i = CMat(),
                                SolverOptions opts = SolverOptions::defaults());

/// Integral-equation data of the step, for residual verification: the kernel
/// (inhomogeneity) G = ∓Γ(x)Γ(y)† and the solution kernel 𝒜 = ±Γ(x)K(x)⁺Γ(y)†.
CMat gl_kernel(const SurgeryResult& r, double x, double y);
CMat gl_solution_kernel(const SurgeryResult& r, double x, double y);

/// Max-norm residual of 𝒜 + G + ∫₀ˣ 𝒜(x,t) G(t,y) dt over a subsampled (x, y > …)
/// triangle — the defining equation of the transformation kernel.
double gl_residual(const SurgeryResult& r, int samples = 30);

/// Transformed scattering matrix from the factor: S̃ = F S F with F = scattering(k).
CMat scattering_factor(const SurgeryResult& r, double k, const CMat& S);

/// Closed-form transformed regular solution φ̃(k, ·) on the emission grid.
MatrixSolution phi_tilde(const SurgeryResult& r, cplx k,
                         SolverOptions opts = SolverOptions::defaults());

/// Closed-form transformed Jost solution f̃(k, ·) on the emission grid.
MatrixSolution f_tilde(const SurgeryResult& r, cplx k,
                       SolverOptions opts = SolverOptions::defaults());

/// Tail-decay model fitted to ‖Ṽ − V‖ over a window [a, b]:
/// log-norm least squares against e^{−2κx}, x·e^{−2κx}, x²·e^{−2κx}.
struct DecayFit {
  std::string model;      ///< "e", "xe", or "x2e" — best sum of squares
  double constant = 0.0;  ///< fitted prefactor of the best model
  double slope = 0.0;     ///< unconstrained log-slope diagnostic
  bool e2kx_diverges = false;  ///< ‖ΔV‖e^{2κx} grows across the window
};

DecayFit decay_fit(const Problem& before, const Problem& after, double kappa, double a,
                   double b);

/// Result (transformed problem + factor + diagnostics) serialization.
std::string result_to_json_string(const SurgeryResult& r);

}  // namespace specsurg
