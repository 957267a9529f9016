/**
 * @file matops.cpp
 * @brief SVD-backed pseudoinverse and projection operations plus small numeric helpers
 *        shared across the library (operator norm, quadrature, uniform grids, number
 *        formatting).
 */

#include "specsurg/matops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace specsurg {

namespace {

struct SvdParts {
  Eigen::JacobiSVD<CMat> svd;
  double tol = 0.0;
  int rank = 0;
};

SvdParts decompose(const CMat& M, double tol) {
  SvdParts parts;
  parts.svd.compute(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (tol <= 0.0) tol = default_rank_tol(M);
  parts.tol = tol;
  const auto& sv = parts.svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++parts.rank;
  return parts;
}

RankInfo make_info(const SvdParts& parts) {
  RankInfo info;
  info.rank = parts.rank;
  info.tolerance_used = parts.tol;
  const auto& sv = parts.svd.singularValues();
  info.singular_values.assign(sv.data(), sv.data() + sv.size());
  return info;
}

// Full (square) unitary of the left/right singular subspaces for projections.
Eigen::JacobiSVD<CMat> full_svd(const CMat& M) {
  return Eigen::JacobiSVD<CMat>(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

}  // namespace

double op_norm(const CMat& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

bool all_finite(const CMat& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const cplx v = M(i, j);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  return true;
}

CMat simpson(const std::vector<CMat>& f, double h) {
  if (f.empty()) throw NumericalError("simpson: empty sample list");
  if (f.size() % 2 == 0) throw NumericalError("simpson: even node count (need odd)");
  CMat acc = CMat::Zero(f.front().rows(), f.front().cols());
  if (f.size() == 1) return acc;
  for (std::size_t i = 0; i + 2 < f.size(); i += 2)
    acc += f[i] + 4.0 * f[i + 1] + f[i + 2];
  return (h / 3.0) * acc;
}

std::vector<CMat> running_integral(const std::vector<CMat>& f, const std::vector<CMat>& df,
                                   double h) {
  if (f.empty()) throw NumericalError("running_integral: empty sample list");
  if (df.size() != f.size())
    throw NumericalError("running_integral: derivative sample count mismatch");
  std::vector<CMat> cum(f.size());
  cum[0] = CMat::Zero(f.front().rows(), f.front().cols());
  const double h2 = h / 2.0, h12 = h * h / 12.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i)
    cum[i + 1] = cum[i] + h2 * (f[i] + f[i + 1]) - h12 * (df[i + 1] - df[i]);
  return cum;
}

std::vector<double> uniform_grid(double x_end, double h_target) {
  if (!(x_end > 0.0) || !(h_target > 0.0))
    throw NumericalError("uniform_grid: x_end and h_target must be positive");
  // Odd node count so composite Simpson applies directly.
  std::size_t intervals = static_cast<std::size_t>(std::ceil(x_end / h_target));
  if (intervals < 2) intervals = 2;
  if (intervals % 2 == 1) ++intervals;
  const double h = x_end / static_cast<double>(intervals);
  std::vector<double> xs(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) xs[i] = h * static_cast<double>(i);
  xs.front() = 0.0;
  xs.back() = x_end;
  return xs;
}

std::string fmt17(double v) {
  if (v == 0.0) v = 0.0;  // canonicalize −0 so writes round-trip byte-identically
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

double default_rank_tol(const CMat& M) {
  const double smax = op_norm(M);
  const double n = static_cast<double>(std::max(M.rows(), M.cols()));
  return std::max(n * smax * 1e-12, std::numeric_limits<double>::min());
}

CMat pinv(const CMat& M, double tol, RankInfo* info) {
  SvdParts parts = decompose(M, tol);
  if (info) *info = make_info(parts);
  const auto& sv = parts.svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > parts.tol) inv(i) = 1.0 / sv(i);
  return parts.svd.matrixV() * inv.asDiagonal() * parts.svd.matrixU().adjoint();
}

std::pair<CMat, RankInfo> kernel_projection(const CMat& M, double tol) {
  auto svd = full_svd(M);
  if (tol <= 0.0) tol = default_rank_tol(M);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  const Eigen::Index n = M.cols();
  // Columns of V beyond the rank span Ker(M).
  CMat Q = CMat::Zero(n, n);
  if (rank < n) {
    const CMat Vk = svd.matrixV().rightCols(n - rank);
    Q = Vk * Vk.adjoint();
  }
  Q = hermitize(Q);
  RankInfo info;
  info.rank = rank;
  info.tolerance_used = tol;
  info.singular_values.assign(sv.data(), sv.data() + sv.size());
  return {Q, info};
}

std::pair<CMat, RankInfo> range_projection(const CMat& M, double tol) {
  auto svd = full_svd(M);
  if (tol <= 0.0) tol = default_rank_tol(M);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  const Eigen::Index m = M.rows();
  CMat P = CMat::Zero(m, m);
  if (rank > 0) {
    const CMat Uk = svd.matrixU().leftCols(rank);
    P = Uk * Uk.adjoint();
  }
  P = hermitize(P);
  RankInfo info;
  info.rank = rank;
  info.tolerance_used = tol;
  info.singular_values.assign(sv.data(), sv.data() + sv.size());
  return {P, info};
}

namespace {

// Shared precondition handling for the positive square-root pair.
CMat checked_hermitian_pd(const CMat& M, const char* who) {
  if (M.rows() != M.cols()) throw NumericalError(std::string(who) + ": matrix not square");
  const double scale = std::max(op_norm(M), std::numeric_limits<double>::min());
  const double asym = op_norm(CMat(M - M.adjoint()));
  if (asym > 1e-10 * scale)
    throw NumericalError(std::string(who) + ": input not hermitian");
  return hermitize(M);
}

}  // namespace

CMat sqrt_pos(const CMat& M) {
  const CMat H = checked_hermitian_pd(M, "sqrt_pos");
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && !(ev.minCoeff() > 0.0))
    throw NumericalError("sqrt_pos: matrix not positive definite");
  return hermitize(es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                   es.eigenvectors().adjoint());
}

CMat inv_sqrt_pos(const CMat& M) {
  const CMat H = checked_hermitian_pd(M, "inv_sqrt_pos");
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && !(ev.minCoeff() > 0.0))
    throw NumericalError("inv_sqrt_pos: matrix not positive definite");
  return hermitize(es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().adjoint());
}

CMat pinv_derivative(const CMat& Wplus, const CMat& integrand) {
  return Wplus * integrand * Wplus;
}

double cond_number(const CMat& M) {
  if (M.size() == 0) return 0.0;
  const auto sv = M.jacobiSvd().singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

double penrose_residual(const CMat& M, const CMat& Mp) {
  const CMat MMp = M * Mp;
  const CMat MpM = Mp * M;
  double r = op_norm(CMat(MMp * M - M));
  r = std::max(r, op_norm(CMat(MpM * Mp - Mp)));
  r = std::max(r, op_norm(CMat(MMp - MMp.adjoint())));
  r = std::max(r, op_norm(CMat(MpM - MpM.adjoint())));
  return r;
}

}  // namespace specsurg
