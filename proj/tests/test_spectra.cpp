/**
 * @file test_spectra.cpp
 * @brief Bound-state analysis tests: locating decay rates, the regular- and
 *        Jost-side normalization matrices, and the dependency matrix linking
 *        them, checked against a Robin problem with closed-form answers.
 */

#include <cmath>
#include <complex>

#include <doctest.h>

#include "specsurg/matops.hpp"
#include "specsurg/spectra.hpp"

namespace {

using specsurg::CMat;
using specsurg::cplx;

// Free potential with Robin data (A, B) = (1, −κ₀): the single bound state sits
// exactly at κ = κ₀ with φ(iκ₀, x) = f(iκ₀, x) = e^{−κ₀x}.
specsurg::Problem robin_free(double kappa0) {
  auto p = specsurg::catalog_problem("free");
  p.boundary.A = CMat::Identity(1, 1);
  p.boundary.B = -kappa0 * CMat::Identity(1, 1);
  return p;
}

}  // namespace

TEST_SUITE("spectra") {

TEST_CASE("free problems carry no bound states") {
  CHECK(specsurg::find_bound_states(specsurg::catalog_problem("free")).states.empty());
  CHECK(specsurg::find_bound_states(specsurg::catalog_problem("free_neumann"))
            .states.empty());
  CHECK(specsurg::find_bound_states(specsurg::catalog_problem("example89"), 2.5)
            .states.empty());
}

TEST_CASE("Robin bound state matches every closed form") {
  const double kappa0 = 0.6;
  const auto p = robin_free(kappa0);

  const auto spec = specsurg::find_bound_states(p, 2.0);
  REQUIRE(spec.states.size() == 1);
  const auto& s = spec.states[0];

  CHECK(std::abs(s.kappa - kappa0) <= 1e-9);
  CHECK(s.m == 1);
  CHECK(std::abs(s.Q(0, 0) - cplx(1, 0)) <= 1e-12);
  CHECK(std::abs(s.P(0, 0) - cplx(1, 0)) <= 1e-12);

  // ∫₀^∞ e^{−2κx} dx = 1/(2κ) ⇒ H = B = 1/(2κ), C = M = √(2κ).
  const double root = std::sqrt(2.0 * kappa0);
  CHECK(std::abs(s.Hj(0, 0) - cplx(1.0 / (2.0 * kappa0), 0)) <= 1e-6);
  CHECK(std::abs(s.Bj(0, 0) - cplx(1.0 / (2.0 * kappa0), 0)) <= 1e-6);
  CHECK(std::abs(s.C(0, 0) - cplx(root, 0)) <= 1e-6);
  CHECK(std::abs(s.M(0, 0) - cplx(root, 0)) <= 1e-6);

  // D is a unitary pairing; here both sides are the same positive function.
  CHECK(std::abs(std::abs(s.D(0, 0)) - 1.0) <= 1e-8);
  CHECK(std::abs(s.D(0, 0) - cplx(1, 0)) <= 1e-6);
  CHECK(specsurg::op_norm(CMat(s.D * s.D.adjoint() * s.D - s.D)) <= 1e-9);
  CHECK(specsurg::op_norm(CMat(s.D.adjoint() * s.D - s.Q)) <= 1e-8);
  CHECK(specsurg::op_norm(CMat(s.D * s.D.adjoint() - s.P)) <= 1e-8);

  // φ(iκ)C and f(iκ)M D agree pointwise.
  const std::vector<double> xs{0.0, 0.8, 2.1, 4.0};
  const auto phi = specsurg::regular_solution(p, cplx(0, s.kappa), xs);
  const auto f = specsurg::jost_solution(p, cplx(0, s.kappa), xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const CMat lhs = phi.psi[i] * s.C;
    const CMat rhs = f.psi[i] * s.M * s.D;
    CHECK(specsurg::op_norm(CMat(lhs - rhs)) <= 1e-7);
  }
}

TEST_CASE("normalization with a zero projection degenerates gracefully") {
  const auto p = robin_free(0.6);
  const CMat Q0 = CMat::Zero(1, 1);
  const auto [C, H] = specsurg::gl_normalization(p, 0.6, Q0);
  CHECK(specsurg::op_norm(C) <= 1e-14);
  CHECK(std::abs(H(0, 0) - cplx(1, 0)) <= 1e-12);
}

TEST_CASE("two-channel bump potential carries exactly one bound state") {
  const auto p = specsurg::catalog_problem("bump2");
  const auto spec = specsurg::find_bound_states(p);
  REQUIRE(spec.states.size() == 1);
  const auto& s = spec.states[0];
  CHECK(s.kappa >= 0.2);
  CHECK(s.kappa <= 0.8);
  CHECK(s.m == 1);
  CHECK(specsurg::op_norm(CMat(s.D.adjoint() * s.D - s.Q)) <= 1e-8);
  CHECK(specsurg::op_norm(CMat(s.D * s.D.adjoint() - s.P)) <= 1e-8);
  // ∫ (φC)†(φC) = Q: re-derive the normalization integral and compare.
  const auto [C2, H2] = specsurg::gl_normalization(p, s.kappa, s.Q);
  CHECK(specsurg::op_norm(CMat(C2 - s.C)) <= 1e-7);
}

TEST_CASE("asking for a state where none exists raises a numerical error") {
  const auto p = robin_free(0.6);
  CHECK_THROWS_AS(specsurg::analyze_state(p, 0.3), specsurg::NumericalError);
}

}  // TEST_SUITE
