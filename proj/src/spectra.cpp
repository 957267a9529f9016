/**
 * @file spectra.cpp
 * @brief Bound-state search through σ_min(J(iκ)) dips, normalization integrals on
 *        both the regular and Jost sides, and the dependency matrix linking them.
 */

#include "specsurg/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "specsurg/matops.hpp"

namespace specsurg {

namespace {

// Relative σ threshold separating "kernel" from "regular" singular values of J(iκ).
constexpr double kKernelRatio = 1e-5;

std::pair<double, double> sigma_extremes(const CMat& J) {
  const auto sv = J.jacobiSvd().singularValues();
  return {sv(sv.size() - 1), sv(0)};
}

// Golden-section minimization of a unimodal scalar function on [a, b].
template <typename F>
double golden_min(F&& f, double a, double b, double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// J(−iκ) via the growing branch: the kernel-side product J(−iκ)Q is insensitive to
// the decaying-mode ambiguity of the growing solution because J(iκ)Q = 0.
CMat jost_matrix_growing(const Problem& p, double kappa, const SolverOptions& opts) {
  const double xe = solve_x_end(p);
  const MatrixSolution g = growing_solution(p, kappa, {0.0, xe}, opts);
  return g.psi.front().adjoint() * p.boundary.B -
         g.psi_prime.front().adjoint() * p.boundary.A;
}

}  // namespace

std::pair<CMat, CMat> gl_normalization(const Problem& p, double kappa, const CMat& Q,
                                       SolverOptions opts) {
  if (!(kappa > 0.0)) throw NumericalError("gl normalization requires κ > 0");
  const int n = p.n();
  if (Q.rows() != n || Q.cols() != n)
    throw NumericalError("gl normalization: projection has wrong dimensions");
  const CMat I = CMat::Identity(n, n);
  if (op_norm(CMat(Q * Q - Q)) > 1e-10 || op_norm(CMat(Q - Q.adjoint())) > 1e-10)
    throw NumericalError("gl normalization: Q is not an orthogonal projection");

  // The forward solve stops at a matching radius: past it, local solver errors
  // seeded into the growing mode e^{+κx} overtake the decaying true solution and
  // both the running integral and any tail correction built from φ itself lose
  // accuracy. The retained columns are a fixed combination of the decaying Jost
  // columns, φQ = f·β, so the tail integrates through f instead — f is computed
  // backward from its exact free-tail value and never suffers that contamination.
  const double xe = solve_x_end(p);
  const double xm = std::min(xe, 2.0 + 9.0 / kappa);
  const CMat zero = CMat::Zero(n, n);
  const MatrixSolution sol =
      regular_solution_with_integral(p, cplx(0.0, kappa), {0.0, xm}, Q, zero, opts);
  const double xb = std::max(xe, xm + 1.0);
  const CMat fseed = std::exp(-2.0 * kappa * xb) / (2.0 * kappa) * I;
  const MatrixSolution fs =
      jost_solution_with_integral(p, cplx(0.0, kappa), {xm, xb}, I, fseed, opts);
  const CMat beta = fs.psi.front().partialPivLu().solve(CMat(sol.psi.back() * Q));
  const CMat G = hermitize(sol.cum.back() + beta.adjoint() * fs.cum.front() * beta);
  const CMat H = hermitize(I - Q + G);
  if (op_norm(CMat(H * Q - Q * H)) > 1e-9 * std::max(1.0, op_norm(H)))
    throw NumericalError("gl normalization: H does not commute with Q");
  CMat C;
  try {
    C = inv_sqrt_pos(H) * Q;
  } catch (const NumericalError&) {
    throw NumericalError("gl normalization: H not positive");
  }
  return {C, H};
}

std::pair<CMat, CMat> marchenko_normalization(const Problem& p, double kappa,
                                              const CMat& P, SolverOptions opts) {
  if (!(kappa > 0.0)) throw NumericalError("marchenko normalization requires κ > 0");
  const int n = p.n();
  if (P.rows() != n || P.cols() != n)
    throw NumericalError("marchenko normalization: projection has wrong dimensions");
  const CMat I = CMat::Identity(n, n);
  if (op_norm(CMat(P * P - P)) > 1e-10 || op_norm(CMat(P - P.adjoint())) > 1e-10)
    throw NumericalError("marchenko normalization: P is not an orthogonal projection");

  const double xe = solve_x_end(p);
  // f is exactly e^{ikx}·I at the far end, so the tail of ∫ (fP)†(fP) is
  // e^{−2κxe}/(2κ) · P in closed form; seed the backward accumulation with it.
  const CMat seed = (std::exp(-2.0 * kappa * xe) / (2.0 * kappa)) * P;
  const MatrixSolution sol =
      jost_solution_with_integral(p, cplx(0.0, kappa), {0.0, xe}, P, seed, opts);
  const CMat Aj = hermitize(sol.cum.front());
  const CMat B = hermitize(I - P + Aj);
  if (op_norm(CMat(B * P - P * B)) > 1e-9 * std::max(1.0, op_norm(B)))
    throw NumericalError("marchenko normalization: B does not commute with P");
  CMat M;
  try {
    M = inv_sqrt_pos(B) * P;
  } catch (const NumericalError&) {
    throw NumericalError("marchenko normalization: B not positive");
  }
  return {M, B};
}

CMat dependency_matrix(const Problem& p, const BoundState& s, SolverOptions opts) {
  const int n = p.n();
  const double kappa = s.kappa;
  // Candidate matching points: early enough that the forward decaying combination
  // keeps relative accuracy (growing-mode contamination scales like e^{2κx}),
  // late enough that f is well conditioned.
  const double xm = std::min(solve_x_end(p), 2.0 + 9.0 / kappa);
  std::vector<double> cand;
  for (double x0 : {1.15 / kappa, 2.3 / kappa, 4.6 / kappa, xm})
    cand.push_back(std::min(x0, xm));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
             cand.end());

  std::vector<double> phi_nodes = cand;
  if (phi_nodes.front() > 1e-12) phi_nodes.insert(phi_nodes.begin(), 0.0);
  const cplx k(0.0, kappa);
  const MatrixSolution phi = regular_solution(p, k, phi_nodes, opts);
  const MatrixSolution f = jost_solution(p, k, cand, opts);

  const CMat M_plus = sqrt_pos(s.Bj) * s.P;  // Moore–Penrose inverse of M
  auto node_value = [&](const MatrixSolution& sol, double x0, bool prime) -> CMat {
    for (std::size_t i = 0; i < sol.xs.size(); ++i)
      if (std::fabs(sol.xs[i] - x0) < 1e-9) return prime ? sol.psi_prime[i] : sol.psi[i];
    throw NumericalError("dependency matrix: internal node lookup failed");
  };

  CMat best;
  double best_defect = std::numeric_limits<double>::infinity();
  for (bool prime : {false, true}) {
    for (double x0 : cand) {
      const CMat fx = node_value(f, x0, prime);
      if (cond_number(fx) > 1e8) continue;
      const CMat phix = node_value(phi, x0, prime) * s.C;
      const CMat D = M_plus * fx.partialPivLu().solve(phix);
      const double defect = std::max(op_norm(CMat(D.adjoint() * D - s.Q)),
                                     op_norm(CMat(D * D.adjoint() - s.P)));
      if (defect < best_defect) {
        best_defect = defect;
        best = D;
      }
      if (defect <= 1e-8) return D;
    }
  }
  if (best_defect <= 1e-6) return best;
  throw NumericalError("dependency matrix: no matching point reached the accuracy target");
}

BoundState analyze_state(const Problem& p, double kappa, SolverOptions opts) {
  check_selfadjoint(p);
  if (!(kappa > 0.0)) throw NumericalError("bound-state analysis requires κ > 0");
  const int n = p.n();

  // Snap κ to the local dip of σ_min(J(iκ)). Callers often pass the rate at
  // plan precision while the problem at hand (say, a grid emitted by an earlier
  // transformation) holds its state at a slightly shifted rate; every
  // normalization integral below amplifies such an offset, so refine first and
  // keep the refinement only when it actually deepens the dip.
  const auto smin_at = [&](double kk) {
    return sigma_extremes(jost_matrix(p, cplx(0.0, kk), opts)).first;
  };
  {
    const double k_ref =
        golden_min(smin_at, kappa * (1.0 - 1e-3), kappa * (1.0 + 1e-3), kappa * 1e-12);
    if (smin_at(k_ref) < smin_at(kappa)) kappa = k_ref;
  }

  BoundState s;
  s.kappa = kappa;

  const CMat J = jost_matrix(p, cplx(0.0, kappa), opts);
  const double smax = op_norm(J);
  auto [Q, qinfo] = kernel_projection(J, std::max(smax, 1.0) * kKernelRatio);
  s.m = n - qinfo.rank;
  if (s.m == 0)
    throw NumericalError("no bound state at κ = " + fmt17(kappa));
  s.Q = Q;

  const CMat Jg = jost_matrix_growing(p, kappa, opts);
  const CMat JgQ = Jg * Q;
  auto [P, pinfo] = range_projection(JgQ, op_norm(JgQ) * 1e-8);
  if (pinfo.rank != s.m)
    throw NumericalError("bound-state projections disagree in rank");
  s.P = P;

  auto [C, H] = gl_normalization(p, kappa, s.Q, opts);
  s.C = C;
  s.Hj = H;
  auto [M, B] = marchenko_normalization(p, kappa, s.P, opts);
  s.M = M;
  s.Bj = B;
  s.D = dependency_matrix(p, s, opts);
  return s;
}

Spectrum find_bound_states(const Problem& p, double kappa_max, int scan_points,
                           SolverOptions opts) {
  check_selfadjoint(p);
  if (kappa_max <= 0.0) kappa_max = 1.0 + l1_norm(p.potential);
  if (scan_points < 8) scan_points = 8;

  auto smin_at = [&](double kappa) {
    return sigma_extremes(jost_matrix(p, cplx(0.0, kappa), opts)).first;
  };

  // Dips of σ_min(J(iκ)) relative to the problem's own σ scale over the scan.
  // A per-point σ_min/σ_max ratio would miss a full kernel (all σ small at once,
  // as any 1×1 problem has), so the normalization must be global.
  const double lo = 1e-4;
  std::vector<double> ks(scan_points), rs(scan_points);
  double scale = 0.0;
  for (int i = 0; i < scan_points; ++i) {
    const double t = static_cast<double>(i) / (scan_points - 1);
    ks[i] = std::exp(std::log(lo) + t * (std::log(kappa_max) - std::log(lo)));
    const auto [smin, smax] = sigma_extremes(jost_matrix(p, cplx(0.0, ks[i]), opts));
    rs[i] = smin;
    scale = std::max(scale, smax);
  }
  if (!(scale > 0.0)) scale = 1.0;
  for (double& r : rs) r /= scale;

  std::vector<double> found;
  auto consider = [&](double a, double b) {
    const double kappa = golden_min(smin_at, a, b, 1e-11);
    if (smin_at(kappa) / scale <= kKernelRatio) found.push_back(kappa);
  };
  for (int i = 1; i + 1 < scan_points; ++i)
    if (rs[i] < rs[i - 1] && rs[i] <= rs[i + 1]) consider(ks[i - 1], ks[i + 1]);
  if (rs[0] < rs[1] && rs[0] <= kKernelRatio * 1e3) consider(ks[0] * 0.25, ks[1]);
  if (rs[scan_points - 1] < rs[scan_points - 2] &&
      rs[scan_points - 1] <= kKernelRatio * 1e3)
    consider(ks[scan_points - 2], ks[scan_points - 1]);

  std::sort(found.begin(), found.end());
  for (std::size_t i = 0; i + 1 < found.size(); ++i)
    if (found[i + 1] - found[i] < 1e-6)
      throw NumericalError("bound states closer than 1e-6 cannot be resolved");

  Spectrum spec;
  for (double kappa : found) spec.states.push_back(analyze_state(p, kappa, opts));
  return spec;
}

}  // namespace specsurg
