/**
 * @file solver.cpp
 * @brief Adaptive integration of the twisted first-order systems behind the regular,
 *        Jost, and growing solutions, plus the Jost/scattering matrix assembly.
 */

#include "specsurg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "specsurg/matops.hpp"

namespace specsurg {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

enum class Family { Regular, Jost };

// First-order form of −ψ″ + Vψ = k²ψ in twisted variables (p, q) = e^{∓ikx}(ψ, ψ′):
//   p′ = αp + q,  q′ = (V − k²)p + αq,  α = +ik (regular) or −ik (Jost).
// The optional third block accumulates ∫ (ψθ)†(ψθ) in untwisted scale.
struct TwistedSystem {
  const Potential* pot = nullptr;
  int n = 0;
  cplx alpha{};
  cplx k2{};
  Family family = Family::Regular;
  bool with_cum = false;
  double two_im_k = 0.0;
  CMat theta;

  void operator()(const State& y, State& dy, double x) const {
    if (dy.size() != y.size()) dy.resize(y.size());
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const cplx* yc = reinterpret_cast<const cplx*>(y.data());
    cplx* dc = reinterpret_cast<cplx*>(dy.data());
    Eigen::Map<const CMat> P(yc, n, n), Q(yc + nn, n, n);
    Eigen::Map<CMat> dP(dc, n, n), dQ(dc + nn, n, n);
    const CMat Vx = sample(*pot, x);
    dP = alpha * P + Q;
    dQ = Vx * P - k2 * P + alpha * Q;
    if (with_cum) {
      Eigen::Map<CMat> dC(dc + 2 * nn, n, n);
      const CMat pt = P * theta;
      // |e^{±ikx}|² = e^{∓2 Im(k) x} undoes the twist, so dC is (ψθ)†(ψθ) exactly
      // (negated for the Jost family, which integrates backward from the far end).
      if (family == Family::Regular)
        dC = std::exp(two_im_k * x) * (pt.adjoint() * pt);
      else
        dC = -std::exp(-two_im_k * x) * (pt.adjoint() * pt);
    }
  }
};

struct Collector {
  MatrixSolution* out = nullptr;
  int n = 0;
  cplx alpha{};
  bool with_cum = false;

  void operator()(const State& y, double x) const {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const cplx* yc = reinterpret_cast<const cplx*>(y.data());
    Eigen::Map<const CMat> P(yc, n, n), Q(yc + nn, n, n);
    const cplx e = std::exp(-alpha * x);
    out->xs.push_back(x);
    out->psi.push_back(e * P);
    out->psi_prime.push_back(e * Q);
    if (with_cum) out->cum.push_back(Eigen::Map<const CMat>(yc + 2 * nn, n, n));
  }
};

void check_nodes(const std::vector<double>& xs, bool need_zero_start, const char* who) {
  if (xs.empty()) throw NumericalError(std::string(who) + ": empty node list");
  if (xs.front() < -1e-12) throw NumericalError(std::string(who) + ": negative node");
  if (need_zero_start && std::fabs(xs.front()) > 1e-12)
    throw NumericalError(std::string(who) + ": nodes must start at x = 0");
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    if (!(xs[i + 1] > xs[i]))
      throw NumericalError(std::string(who) + ": nodes must increase strictly");
}

void integrate_over(const TwistedSystem& sys, State& y, const std::vector<double>& times,
                    double dt0, const SolverOptions& opts, const Collector& obs) {
  auto stepper =
      odeint::make_controlled(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, sys, y, times.begin(), times.end(), dt0, obs);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("integration failed: ") + e.what());
  }
}

void check_finite(const MatrixSolution& sol, const char* who) {
  for (const CMat& m : sol.psi)
    if (!all_finite(m)) throw NumericalError(std::string(who) + ": non-finite solution values");
  for (const CMat& m : sol.psi_prime)
    if (!all_finite(m)) throw NumericalError(std::string(who) + ": non-finite derivative values");
  for (const CMat& m : sol.cum)
    if (!all_finite(m)) throw NumericalError(std::string(who) + ": non-finite integral values");
}

MatrixSolution run_regular(const Problem& p, cplx k, std::vector<double> xs,
                           const CMat* theta, const CMat* cum0, const CMat& psi0,
                           const CMat& psi0_prime, const SolverOptions& opts) {
  check_selfadjoint(p);
  check_nodes(xs, true, "regular solution");
  xs.front() = 0.0;
  const int n = p.n();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const bool with_cum = theta != nullptr;

  State y(2 * (with_cum ? 3 : 2) * nn, 0.0);
  cplx* yc = reinterpret_cast<cplx*>(y.data());
  Eigen::Map<CMat>(yc, n, n) = psi0;
  Eigen::Map<CMat>(yc + nn, n, n) = psi0_prime;
  if (with_cum) Eigen::Map<CMat>(yc + 2 * nn, n, n) = *cum0;

  TwistedSystem sys;
  sys.pot = &p.potential;
  sys.n = n;
  sys.alpha = cplx(0, 1) * k;
  sys.k2 = k * k;
  sys.family = Family::Regular;
  sys.with_cum = with_cum;
  sys.two_im_k = 2.0 * k.imag();
  if (with_cum) sys.theta = *theta;

  MatrixSolution sol;
  sol.k = k;
  Collector obs{&sol, n, sys.alpha, with_cum};
  integrate_over(sys, y, xs, 1e-3, opts, obs);
  check_finite(sol, "regular solution");
  return sol;
}

MatrixSolution run_jost(const Problem& p, cplx k, std::vector<double> xs,
                        const CMat* theta, const CMat* cum_end, const SolverOptions& opts) {
  check_selfadjoint(p);
  check_nodes(xs, false, "jost solution");
  if (k.imag() < -1e-14)
    throw NumericalError("jost solution requires Im k ≥ 0");
  const int n = p.n();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const bool with_cum = theta != nullptr;

  // The accumulated-integral variant seeds cum at xs.back(), so integration must
  // start exactly there; otherwise push the start beyond the support of V.
  double x_start = xs.back();
  if (!with_cum) x_start = std::max(x_start, x_max_for(p.potential, 1e-10));

  std::vector<double> times;
  const bool extra = x_start > xs.back() + 1e-12;
  if (extra) times.push_back(x_start);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) times.push_back(*it);

  State y(2 * (with_cum ? 3 : 2) * nn, 0.0);
  cplx* yc = reinterpret_cast<cplx*>(y.data());
  Eigen::Map<CMat>(yc, n, n) = CMat::Identity(n, n);
  Eigen::Map<CMat>(yc + nn, n, n) = cplx(0, 1) * k * CMat::Identity(n, n);
  if (with_cum) Eigen::Map<CMat>(yc + 2 * nn, n, n) = *cum_end;

  TwistedSystem sys;
  sys.pot = &p.potential;
  sys.n = n;
  sys.alpha = -cplx(0, 1) * k;
  sys.k2 = k * k;
  sys.family = Family::Jost;
  sys.with_cum = with_cum;
  sys.two_im_k = 2.0 * k.imag();
  if (with_cum) sys.theta = *theta;

  MatrixSolution sol;
  sol.k = k;
  Collector obs{&sol, n, sys.alpha, with_cum};
  integrate_over(sys, y, times, -1e-3, opts, obs);

  if (extra) {
    sol.xs.erase(sol.xs.begin());
    sol.psi.erase(sol.psi.begin());
    sol.psi_prime.erase(sol.psi_prime.begin());
    if (with_cum) sol.cum.erase(sol.cum.begin());
  }
  std::reverse(sol.xs.begin(), sol.xs.end());
  std::reverse(sol.psi.begin(), sol.psi.end());
  std::reverse(sol.psi_prime.begin(), sol.psi_prime.end());
  std::reverse(sol.cum.begin(), sol.cum.end());
  check_finite(sol, "jost solution");
  return sol;
}

CMat jost_matrix_from_boundary(const Problem& p, const CMat& f0, const CMat& f0p) {
  return f0.adjoint() * p.boundary.B - f0p.adjoint() * p.boundary.A;
}

CMat jost_matrix_core(const Problem& p, cplx k, const SolverOptions& opts) {
  const cplx kk = -std::conj(k);
  const double xe = solve_x_end(p);
  MatrixSolution sol = run_jost(p, kk, {0.0, xe}, nullptr, nullptr, opts);
  return jost_matrix_from_boundary(p, sol.psi.front(), sol.psi_prime.front());
}

}  // namespace

SolverOptions SolverOptions::defaults() {
  SolverOptions opts;
  if (const char* env = std::getenv("SPECSURG_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0 && std::isfinite(v)) {
      opts.rel_tol = v;
      opts.abs_tol = v * 1e-2;
    }
  }
  return opts;
}

MatrixSolution regular_solution(const Problem& p, cplx k, std::vector<double> xs,
                                SolverOptions opts) {
  return run_regular(p, k, std::move(xs), nullptr, nullptr, p.boundary.A, p.boundary.B,
                     opts);
}

MatrixSolution regular_solution_with_integral(const Problem& p, cplx k,
                                              std::vector<double> xs, const CMat& theta,
                                              const CMat& cum_at_zero, SolverOptions opts) {
  return run_regular(p, k, std::move(xs), &theta, &cum_at_zero, p.boundary.A,
                     p.boundary.B, opts);
}

MatrixSolution jost_solution(const Problem& p, cplx k, std::vector<double> xs,
                             SolverOptions opts) {
  return run_jost(p, k, std::move(xs), nullptr, nullptr, opts);
}

MatrixSolution jost_solution_with_integral(const Problem& p, cplx k,
                                           std::vector<double> xs, const CMat& theta,
                                           const CMat& cum_at_end, SolverOptions opts) {
  return run_jost(p, k, std::move(xs), &theta, &cum_at_end, opts);
}

MatrixSolution growing_solution(const Problem& p, double kappa, std::vector<double> xs,
                                SolverOptions opts) {
  if (!(kappa > 0.0)) throw NumericalError("growing solution requires κ > 0");
  check_nodes(xs, true, "growing solution");
  const int n = p.n();
  const double xe = std::max(xs.back(), x_max_for(p.potential, 1e-10));
  std::vector<double> nodes = xs;
  const bool extra = xe > xs.back() + 1e-12;
  if (extra) nodes.push_back(xe);

  // Forward integration is the stable direction for the growing branch.  Beyond the
  // far end the potential vanishes, so value and derivative split the solution into
  // pure e^{±κx} modes there; normalizing by the growing-mode coefficient alone keeps
  // the result free of O(e^{−2κxe}) leading-order contamination (the residual decaying
  // admixture multiplies J(iκ) in downstream pairings and is annihilated by kernel
  // projections).
  const cplx k(0.0, kappa);
  const CMat I = CMat::Identity(n, n);
  auto lead_of = [&](const MatrixSolution& sol) -> CMat {
    const double far = sol.xs.back();
    return std::exp(-kappa * far) *
           (kappa * sol.psi.back() + sol.psi_prime.back()) / (2.0 * kappa);
  };
  MatrixSolution raw =
      run_regular(p, k, nodes, nullptr, nullptr, I, kappa * I, opts);
  CMat lead = lead_of(raw);
  if (cond_number(lead) > 1e8) {
    raw = run_regular(p, k, nodes, nullptr, nullptr, I, 2.0 * kappa * I, opts);
    lead = lead_of(raw);
    if (cond_number(lead) > 1e8)
      throw NumericalError("growing solution: leading coefficient is singular");
  }
  const CMat lead_inv = lead.partialPivLu().inverse();
  if (extra) {
    raw.xs.pop_back();
    raw.psi.pop_back();
    raw.psi_prime.pop_back();
  }
  for (auto& m : raw.psi) m = m * lead_inv;
  for (auto& m : raw.psi_prime) m = m * lead_inv;
  check_finite(raw, "growing solution");
  return raw;
}

CMat jost_matrix(const Problem& p, cplx k, SolverOptions opts) {
  if (std::abs(k) < 1e-9) {
    // J is continuous at k = 0; symmetric averaging cancels the O(k) term.
    const CMat a = jost_matrix_core(p, cplx(1e-6, 0.0), opts);
    const CMat b = jost_matrix_core(p, cplx(-1e-6, 0.0), opts);
    return 0.5 * (a + b);
  }
  return jost_matrix_core(p, k, opts);
}

CMat jost_matrix_fixed_step(const Problem& p, cplx k, double h, SolverOptions opts) {
  if (!(h > 0.0)) throw NumericalError("fixed-step jost matrix requires h > 0");
  check_selfadjoint(p);
  const cplx kk = -std::conj(k);
  if (kk.imag() < -1e-14)
    throw NumericalError("jost solution requires Im k ≥ 0");
  const double xe = solve_x_end(p);
  const long N = std::max(2L, static_cast<long>(std::llround(std::ceil(xe / h))));
  const double hh = xe / static_cast<double>(N);
  const int n = p.n();
  const std::size_t nn = static_cast<std::size_t>(n) * n;

  State y(4 * nn, 0.0);
  cplx* yc = reinterpret_cast<cplx*>(y.data());
  Eigen::Map<CMat>(yc, n, n) = CMat::Identity(n, n);
  Eigen::Map<CMat>(yc + nn, n, n) = cplx(0, 1) * kk * CMat::Identity(n, n);

  TwistedSystem sys;
  sys.pot = &p.potential;
  sys.n = n;
  sys.alpha = -cplx(0, 1) * kk;
  sys.k2 = kk * kk;
  sys.family = Family::Jost;

  odeint::runge_kutta_dopri5<State> rk;
  for (long i = 0; i < N; ++i) {
    const double t = xe - static_cast<double>(i) * hh;
    rk.do_step(sys, y, t, -hh);
  }
  Eigen::Map<const CMat> v(yc, n, n), w(yc + nn, n, n);
  const CMat f0 = v, f0p = w;  // e^{-α·0} = 1
  if (!all_finite(f0) || !all_finite(f0p))
    throw NumericalError("fixed-step jost matrix: non-finite values");
  return jost_matrix_from_boundary(p, f0, f0p);
}

ScatteringResult scattering_matrix(const Problem& p, double k, SolverOptions opts) {
  ScatteringResult res;
  res.k = k;
  res.J_plus = jost_matrix(p, cplx(k, 0.0), opts);
  res.J_minus = jost_matrix(p, cplx(-k, 0.0), opts);
  res.cond_J = cond_number(res.J_plus);
  if (!(res.cond_J < 1e12))
    throw NumericalError("scattering matrix: J(k) is singular at k = " + fmt17(k) +
                         " (exceptional point)");
  res.S = -res.J_minus * res.J_plus.partialPivLu().inverse();
  return res;
}

MatrixSolution physical_solution(const Problem& p, double k, std::vector<double> xs,
                                 SolverOptions opts) {
  if (!(std::fabs(k) > 0.0))
    throw NumericalError("physical solution requires real k ≠ 0");
  check_nodes(xs, false, "physical solution");
  std::vector<double> nodes = xs;
  const bool added0 = nodes.front() > 1e-12;
  if (added0) nodes.insert(nodes.begin(), 0.0);

  const MatrixSolution fp = jost_solution(p, cplx(k, 0.0), nodes, opts);
  const MatrixSolution fm = jost_solution(p, cplx(-k, 0.0), nodes, opts);
  // J(k) comes from the solve at −k and vice versa.
  const CMat J_plus = jost_matrix_from_boundary(p, fm.psi.front(), fm.psi_prime.front());
  const CMat J_minus = jost_matrix_from_boundary(p, fp.psi.front(), fp.psi_prime.front());
  if (!(cond_number(J_plus) < 1e12))
    throw NumericalError("physical solution: J(k) is singular at k = " + fmt17(k) +
                         " (exceptional point)");
  const CMat S = -J_minus * J_plus.partialPivLu().inverse();

  MatrixSolution sol;
  sol.k = cplx(k, 0.0);
  const std::size_t begin = added0 ? 1 : 0;
  for (std::size_t i = begin; i < nodes.size(); ++i) {
    sol.xs.push_back(nodes[i]);
    sol.psi.push_back(fm.psi[i] + fp.psi[i] * S);
    sol.psi_prime.push_back(fm.psi_prime[i] + fp.psi_prime[i] * S);
  }
  check_finite(sol, "physical solution");
  return sol;
}

double solve_x_end(const Problem& p, double eps) { return x_max_for(p.potential, eps); }

}  // namespace specsurg
