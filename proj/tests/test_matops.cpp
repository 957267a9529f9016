/**
 * @file test_matops.cpp
 * @brief Contract tests for the pseudoinverse/projection layer and the shared
 *        numeric helpers.
 */

#include <cmath>
#include <random>

#include <doctest.h>

#include "specsurg/matops.hpp"

namespace {

using specsurg::CMat;
using specsurg::cplx;

CMat random_cmat(std::mt19937& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = cplx(u(rng), u(rng));
  return M;
}

CMat diag2(double a, double b) {
  CMat M = CMat::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

}  // namespace

TEST_SUITE("matops") {

TEST_CASE("pseudoinverse satisfies all four defining relations") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    for (auto [r, c] : {std::pair{3, 3}, {4, 2}, {2, 4}}) {
      const CMat M = random_cmat(rng, r, c);
      specsurg::RankInfo info;
      const CMat Mp = specsurg::pinv(M, -1.0, &info);
      CHECK(info.rank == std::min(r, c));
      CHECK(specsurg::penrose_residual(M, Mp) <= 10.0 * info.tolerance_used);
    }
  }
}

TEST_CASE("pseudoinverse of a rank-deficient matrix") {
  std::mt19937 rng(11);
  const CMat U = random_cmat(rng, 3, 1);
  const CMat V = random_cmat(rng, 3, 1);
  const CMat M = U * V.adjoint();  // rank 1
  specsurg::RankInfo info;
  const CMat Mp = specsurg::pinv(M, -1.0, &info);
  CHECK(info.rank == 1);
  CHECK(specsurg::penrose_residual(M, Mp) <= 10.0 * info.tolerance_used);
}

TEST_CASE("pseudoinverse commutes with the adjoint") {
  std::mt19937 rng(13);
  const CMat M = random_cmat(rng, 3, 4);
  const CMat lhs = specsurg::pinv(M).adjoint();
  const CMat rhs = specsurg::pinv(CMat(M.adjoint()));
  CHECK(specsurg::op_norm(CMat(lhs - rhs)) <= 1e-12);
}

TEST_CASE("pseudoinverse respects direct sums") {
  std::mt19937 rng(17);
  const CMat M1 = random_cmat(rng, 2, 2);
  const CMat M2 = random_cmat(rng, 3, 3);
  CMat M = CMat::Zero(5, 5);
  M.topLeftCorner(2, 2) = M1;
  M.bottomRightCorner(3, 3) = M2;
  CMat expected = CMat::Zero(5, 5);
  expected.topLeftCorner(2, 2) = specsurg::pinv(M1);
  expected.bottomRightCorner(3, 3) = specsurg::pinv(M2);
  CHECK(specsurg::op_norm(CMat(specsurg::pinv(M) - expected)) <= 1e-10);
}

TEST_CASE("kernel projection on reference inputs") {
  CMat z1 = CMat::Zero(1, 1);
  auto [Q0, i0] = specsurg::kernel_projection(z1);
  CHECK(i0.rank == 0);
  CHECK(std::abs(Q0(0, 0) - cplx(1, 0)) <= 1e-13);

  auto [Q1, i1] = specsurg::kernel_projection(diag2(0.0, 1.0));
  CHECK(i1.rank == 1);
  CHECK(specsurg::op_norm(CMat(Q1 - diag2(1.0, 0.0))) <= 1e-13);

  auto [Q2, i2] = specsurg::kernel_projection(CMat(CMat::Identity(3, 3)));
  CHECK(i2.rank == 3);
  CHECK(specsurg::op_norm(Q2) <= 1e-13);
}

TEST_CASE("kernel projection annihilates and is an orthogonal projection") {
  std::mt19937 rng(19);
  const CMat W = random_cmat(rng, 3, 2);
  const CMat M = W * W.adjoint();  // rank 2 hermitian in 3×3
  auto [Q, info] = specsurg::kernel_projection(M);
  CHECK(info.rank == 2);
  CHECK(specsurg::op_norm(CMat(M * Q)) <= 10.0 * info.tolerance_used * specsurg::op_norm(M));
  CHECK(specsurg::op_norm(CMat(Q * Q - Q)) <= 1e-13);
  CHECK(specsurg::op_norm(CMat(Q - Q.adjoint())) <= 1e-13);
}

TEST_CASE("range projection spans the columns") {
  std::mt19937 rng(23);
  const CMat W = random_cmat(rng, 3, 1);
  auto [P, info] = specsurg::range_projection(W);
  CHECK(info.rank == 1);
  CHECK(specsurg::op_norm(CMat(P * W - W)) <= 1e-12 * specsurg::op_norm(W));
  CHECK(specsurg::op_norm(CMat(P * P - P)) <= 1e-13);
}

TEST_CASE("positive square roots on reference inputs") {
  const CMat R = specsurg::sqrt_pos(diag2(4.0, 9.0));
  CHECK(specsurg::op_norm(CMat(R - diag2(2.0, 3.0))) <= 1e-12);

  // H = I − Q + G with Q = diag(1,0), G = diag(4,0) gives H = diag(4,1).
  const CMat H = diag2(4.0, 1.0);
  const CMat Ri = specsurg::inv_sqrt_pos(H);
  CHECK(specsurg::op_norm(CMat(Ri - diag2(0.5, 1.0))) <= 1e-12);
}

TEST_CASE("positive square root at a random positive matrix") {
  std::mt19937 rng(29);
  const CMat W = random_cmat(rng, 3, 3);
  const CMat M = CMat(W * W.adjoint()) + 0.1 * CMat::Identity(3, 3);
  const CMat R = specsurg::sqrt_pos(M);
  CHECK(specsurg::op_norm(CMat(R * R - M)) <= 1e-12 * specsurg::op_norm(M));
  const CMat Ri = specsurg::inv_sqrt_pos(M);
  CHECK(specsurg::op_norm(CMat(Ri * Ri * M - CMat::Identity(3, 3))) <= 1e-11);
}

TEST_CASE("positive square root rejects bad inputs") {
  std::mt19937 rng(31);
  CMat nonherm = random_cmat(rng, 2, 2);
  nonherm(0, 1) += cplx(0.5, 0.5);  // ensure visible asymmetry
  CHECK_THROWS_AS(specsurg::sqrt_pos(nonherm), specsurg::NumericalError);
  CHECK_THROWS_AS(specsurg::sqrt_pos(diag2(1.0, -2.0)), specsurg::NumericalError);
  CHECK_THROWS_AS(specsurg::inv_sqrt_pos(diag2(1.0, 0.0)), specsurg::NumericalError);
}

TEST_CASE("pseudoinverse derivative rule on reference inputs") {
  const CMat zero = CMat::Zero(2, 2);
  CHECK(specsurg::op_norm(specsurg::pinv_derivative(zero, zero)) == 0.0);
  CMat w(1, 1), g(1, 1);
  w(0, 0) = 2.0;
  g(0, 0) = 3.0;
  CHECK(std::abs(specsurg::pinv_derivative(w, g)(0, 0) - cplx(12.0, 0)) <= 1e-14);
}

TEST_CASE("pseudoinverse derivative matches finite differences") {
  // W(x) = U diag(2 + sin x, 0) U† has constant rank; [W⁺]′ = −W⁺ W′ W⁺.
  std::mt19937 rng(37);
  const CMat A = random_cmat(rng, 2, 2);
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullU);
  const CMat U = svd.matrixU();
  auto W_of = [&](double x) { return CMat(U * diag2(2.0 + std::sin(x), 0.0) * U.adjoint()); };
  const double x = 0.4, h = 1e-5;
  const CMat Wp = specsurg::pinv(W_of(x));
  const CMat dW = U * diag2(std::cos(x), 0.0) * U.adjoint();
  const CMat analytic = specsurg::pinv_derivative(Wp, CMat(-dW));
  const CMat fd = (specsurg::pinv(W_of(x + h)) - specsurg::pinv(W_of(x - h))) / (2.0 * h);
  CHECK(specsurg::op_norm(CMat(analytic - fd)) <= 1e-6);
}

TEST_CASE("condition number and penrose residual behave") {
  CHECK(specsurg::cond_number(CMat(CMat::Identity(3, 3))) == doctest::Approx(1.0));
  CHECK(std::isinf(specsurg::cond_number(diag2(1.0, 0.0))));
  std::mt19937 rng(41);
  const CMat M = random_cmat(rng, 3, 3);
  CHECK(specsurg::penrose_residual(M, specsurg::pinv(M)) <= 1e-12);
  CHECK(specsurg::penrose_residual(M, CMat(2.0 * specsurg::pinv(M))) > 1e-3);
}

TEST_CASE("quadrature helpers reproduce closed forms") {
  // Simpson: ∫₀^π sin = 2.
  const int N = 201;
  const double h = M_PI / (N - 1);
  std::vector<CMat> f(N);
  for (int i = 0; i < N; ++i) {
    f[i] = CMat(1, 1);
    f[i](0, 0) = std::sin(i * h);
  }
  CHECK(std::abs(specsurg::simpson(f, h)(0, 0).real() - 2.0) <= 1e-9);
  CHECK_THROWS_AS(specsurg::simpson(std::vector<CMat>(4, f[0]), h), specsurg::NumericalError);

  // Corrected trapezoid running integral: ∫₀ˣ cos = sin x at fourth order.
  std::vector<CMat> g(N), dg(N);
  for (int i = 0; i < N; ++i) {
    g[i] = CMat(1, 1);
    dg[i] = CMat(1, 1);
    g[i](0, 0) = std::cos(i * h);
    dg[i](0, 0) = -std::sin(i * h);
  }
  const auto cum = specsurg::running_integral(g, dg, h);
  double worst = 0.0;
  for (int i = 0; i < N; ++i)
    worst = std::max(worst, std::abs(cum[i](0, 0).real() - std::sin(i * h)));
  CHECK(worst <= 1e-9);
}

TEST_CASE("uniform grids and number formatting") {
  const auto xs = specsurg::uniform_grid(4.0, 2e-3);
  CHECK(xs.size() % 2 == 1);
  CHECK(xs.front() == 0.0);
  CHECK(xs.back() == 4.0);
  const double h = xs[1] - xs[0];
  CHECK(h <= 2e-3 + 1e-12);

  const double v = 0.1 + 0.2;  // not exactly 0.3
  CHECK(std::stod(specsurg::fmt17(v)) == v);
  CHECK(specsurg::fmt17(1.0) == "1");
}

TEST_CASE("hermitize and finiteness checks") {
  CMat M(2, 2);
  M << cplx(1, 0.1), cplx(2, 1), cplx(2, -1), cplx(3, -0.1);
  const CMat H = specsurg::hermitize(M);
  CHECK(specsurg::op_norm(CMat(H - H.adjoint())) <= 1e-15);
  CHECK(specsurg::all_finite(H));
  M(1, 0) = cplx(std::nan(""), 0.0);
  CHECK(!specsurg::all_finite(M));
}

}  // TEST_SUITE
