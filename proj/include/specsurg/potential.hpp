#pragma once
/**
 * @file potential.hpp
 * @brief Problem definition for the half-line matrix Schrödinger operator:
 *        hermitian matrix potentials (sampled on a grid or taken from a small
 *        catalog of closed forms) together with selfadjoint boundary data.
 *
 * A problem couples an n×n potential V(x) on [0, ∞), integrable with finite
 * first moment, with boundary matrices (A, B) describing the condition
 * −B†ψ(0) + A†ψ′(0) = 0.  The pair is admissible when A†B = B†A and
 * A†A + B†B is positive definite; any invertible right factor (A, B) → (AT, BT)
 * describes the same condition.
 */

#include <memory>
#include <string>
#include <vector>

#include "specsurg/types.hpp"

namespace specsurg {

/// Boundary matrices (A, B) for −B†ψ(0) + A†ψ′(0) = 0.
struct BoundaryCondition {
  CMat A;
  CMat B;

  /// ‖A†B − B†A‖ — zero for an admissible pair.
  double selfadjoint_residual() const;
  /// Smallest eigenvalue of A†A + B†B — positive for an admissible pair.
  double definiteness_min_eig() const;
};

enum class PotentialKind { Grid, Catalog };

/// Monotone cubic interpolation data for a grid potential (per real channel).
struct GridCache {
  bool uniform = false;
  double h = 0.0;
  std::vector<double> x;
  std::vector<CMat> y;      // hermitized node values
  std::vector<CMat> slope;  // per-channel monotone slopes, packed as complex
};

struct Potential {
  PotentialKind kind = PotentialKind::Grid;
  int n = 0;
  std::string catalog;          // catalog entry name (catalog kind only)
  std::vector<double> x;        // grid nodes (grid kind only), x[0] = 0, increasing
  std::vector<CMat> V;          // node values (grid kind only)
  double support_end = 0.0;     // V treated as zero beyond this point
  std::shared_ptr<const GridCache> cache;  // built eagerly for grid kind
};

struct Problem {
  Potential potential;
  BoundaryCondition boundary;
  int n() const { return potential.n; }
};

/// Hermitized potential value at x ≥ 0; identically zero beyond support_end.
CMat sample(const Potential& pot, double x);
inline CMat sample(const Problem& p, double x) { return sample(p.potential, x); }

/// Grid potential from node data; validates shape, monotone x starting at 0,
/// per-node hermiticity, and support_end ≤ x.back(); builds the interpolation cache.
Potential make_grid_potential(std::vector<double> x, std::vector<CMat> V,
                              double support_end);

/// Smallest x (≥ 1) beyond which ‖V‖ stays at or below eps.
double x_max_for(const Potential& pot, double eps);

/// ∫₀^∞ ‖V(x)‖ dx (operator norm under the integral).
double l1_norm(const Potential& pot);

/// Report-only admissibility and decay summary; nothing throws here.
struct ValidationReport {
  double selfadjoint_residual = 0.0;
  bool selfadjoint_ok = false;
  double definiteness_min_eig = 0.0;
  bool definiteness_ok = false;
  double moment0 = 0.0;  ///< ∫ ‖V‖
  double moment1 = 0.0;  ///< ∫ (1+x) ‖V‖
  double moment2 = 0.0;  ///< ∫ (1+x)² ‖V‖
  std::vector<std::string> warnings;
  bool ok() const { return selfadjoint_ok && definiteness_ok; }
};

ValidationReport validate(const Problem& p);

/// Hard gate used at solver entry; raises ValidationError naming the violation.
void check_selfadjoint(const Problem& p);

/// Same physical problem under the boundary gauge (A, B) → (AT, BT); T invertible.
Problem with_gauge(const Problem& p, const CMat& T);

/// Built-in problems; unknown names raise ValidationError.
Problem catalog_problem(const std::string& name);
std::vector<std::string> catalog_names();

/// JSON persistence (flat row-major [re, im] pair encoding for matrices).
Problem load_problem(const std::string& path);
void save_problem(const Problem& p, const std::string& path);
std::string problem_to_json_string(const Problem& p);
Problem problem_from_json_string(const std::string& text);

}  // namespace specsurg
