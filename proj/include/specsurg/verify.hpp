#pragma once
/**
 * @file verify.hpp
 * @brief Verification suites: golden closed-form comparisons, the smeared
 *        completeness (Parseval) identity, and the self-consistency battery of
 *        solver/spectra/surgery invariants run against seed problems.
 */

#include <string>
#include <vector>

#include "specsurg/surgery.hpp"

namespace specsurg {

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Report {
  std::string suite;
  std::vector<Check> checks;
  double wall_time = 0.0;
  bool all_pass() const;
};

/// Append a check, deriving pass from measured ≤ tolerance.
void add_check(Report& rep, const std::string& name, double measured, double tolerance);

/// Closed-form golden run: Jost/scattering data of the reflectionless well and the
/// potential produced by grafting a decay-rate-1 bound state onto the free problem.
Report golden_example89(SolverOptions opts = SolverOptions::defaults());

/// Smeared completeness identity: for a smooth compactly supported h,
/// (1/2π)∫ dk ‖∫ Ψ(k,·)†h‖-type reconstruction plus the bound-state sum must
/// reproduce ‖h‖². Returns the relative defect as a single-check report.
Report parseval_smeared(const Problem& p, double k_max = 60.0, int k_points = 2000,
                        SolverOptions opts = SolverOptions::defaults());

/// Invariant battery over one problem: boundary-gauge invariance, solution
/// identities at sample k, bound-state orthogonality data, and per-stage surgery
/// checks. level "quick" subsamples the k and node sets by 4×.
Report invariant_battery(const Problem& p, const std::string& level = "full",
                         SolverOptions opts = SolverOptions::defaults());

std::string report_to_json_string(const Report& rep);
std::string report_to_text(const Report& rep);

}  // namespace specsurg
