/**
 * @file potential.cpp
 * @brief Problem construction, monotone grid interpolation, admissibility checks,
 *        the built-in problem catalog, and JSON persistence.
 */

#include "specsurg/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <Eigen/Dense>

#include "specsurg/json_io.hpp"
#include "specsurg/matops.hpp"

namespace specsurg {

namespace {

// Depth factor of the "bump2" catalog entry, tuned so the problem carries exactly
// one bound state with decay rate inside (0.2, 0.8).
constexpr double kBump2Depth = 0.34;

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Monotone (overshoot-free) cubic slopes per real channel, packed back into
// complex matrices so Hermite evaluation can run entrywise.
std::vector<CMat> monotone_slopes(const std::vector<double>& x, const std::vector<CMat>& y) {
  const std::size_t N = x.size();
  const Eigen::Index rows = y.front().rows(), cols = y.front().cols();
  std::vector<CMat> slope(N, CMat::Zero(rows, cols));
  std::vector<double> yv(N), m(N), h(N - 1), s(N - 1);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      for (int part = 0; part < 2; ++part) {
        for (std::size_t i = 0; i < N; ++i)
          yv[i] = part == 0 ? y[i](r, c).real() : y[i](r, c).imag();
        for (std::size_t i = 0; i + 1 < N; ++i) {
          h[i] = x[i + 1] - x[i];
          s[i] = (yv[i + 1] - yv[i]) / h[i];
        }
        if (N == 2) {
          m[0] = m[1] = s[0];
        } else {
          for (std::size_t i = 1; i + 1 < N; ++i) {
            const double p = (s[i - 1] * h[i] + s[i] * h[i - 1]) / (h[i - 1] + h[i]);
            m[i] = (sgn(s[i - 1]) + sgn(s[i])) *
                   std::min({std::fabs(s[i - 1]), std::fabs(s[i]), 0.5 * std::fabs(p)});
          }
          auto end_slope = [](double s0, double s1, double h0, double h1) {
            const double p = s0 * (1.0 + h0 / (h0 + h1)) - s1 * (h0 / (h0 + h1));
            if (p * s0 <= 0.0) return 0.0;
            if (std::fabs(p) > 2.0 * std::fabs(s0)) return 2.0 * s0;
            return p;
          };
          m[0] = end_slope(s[0], s[1], h[0], h[1]);
          m[N - 1] = end_slope(s[N - 2], s[N - 3], h[N - 2], h[N - 3]);
        }
        for (std::size_t i = 0; i < N; ++i) {
          cplx& sl = slope[i](r, c);
          sl = part == 0 ? cplx(m[i], sl.imag()) : cplx(sl.real(), m[i]);
        }
      }
  return slope;
}

std::shared_ptr<const GridCache> build_cache(const std::vector<double>& x,
                                             const std::vector<CMat>& y) {
  auto cache = std::make_shared<GridCache>();
  cache->x = x;
  cache->y = y;
  cache->slope = monotone_slopes(x, y);
  const double hbar = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  cache->uniform = true;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (std::fabs((x[i + 1] - x[i]) - hbar) > 1e-9 * hbar) {
      cache->uniform = false;
      break;
    }
  cache->h = hbar;
  return cache;
}

CMat eval_grid(const GridCache& g, double x) {
  const std::size_t N = g.x.size();
  std::size_t i;
  if (g.uniform) {
    double t = (x - g.x.front()) / g.h;
    long idx = static_cast<long>(std::floor(t));
    idx = std::max(0L, std::min(idx, static_cast<long>(N) - 2));
    i = static_cast<std::size_t>(idx);
  } else {
    auto it = std::upper_bound(g.x.begin(), g.x.end(), x);
    if (it == g.x.begin()) ++it;
    if (it == g.x.end()) --it;
    i = static_cast<std::size_t>(it - g.x.begin()) - 1;
  }
  const double h = g.x[i + 1] - g.x[i];
  const double t = std::min(1.0, std::max(0.0, (x - g.x[i]) / h));
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * g.y[i] + (h10 * h) * g.slope[i] + h01 * g.y[i + 1] + (h11 * h) * g.slope[i + 1];
}

// ---- catalog closed forms -------------------------------------------------

// Reflectionless well −2 / cosh²x (scalar).
CMat well_value(double x) {
  const double c = std::cosh(x);
  CMat V(1, 1);
  V(0, 0) = -2.0 / (c * c);
  return V;
}

// Result of grafting a decay-rate-1, weight-4 bound state onto the well's free
// Dirichlet problem; each factor below is relatively accurate in double, and the
// quotient decays like x² e^{−2x}.
CMat well_tilde_value(double x) {
  const double c2 = std::cosh(2 * x), s2 = std::sinh(2 * x);
  const double c4 = std::cosh(4 * x), s4 = std::sinh(4 * x);
  const double c1 = std::cosh(x), s1 = std::sinh(x);
  const double x2 = x * x;
  const double num = 7.0 - 24.0 * x + 32.0 * x2 * x2 + 64.0 * x2 * c2 -
                     (16.0 + 32.0 * x) * s2 - (9.0 + 8.0 * x2) * c4 +
                     (-2.0 + 20.0 * x) * s4;
  const double den = (1.0 - 2.0 * x) * c1 + (1.0 + 4.0 * x2 + c2) * s1;
  CMat V(1, 1);
  V(0, 0) = num / (den * den);
  return V;
}

CMat catalog_value(const std::string& name, int n, double x) {
  if (name == "example89") return well_value(x);
  if (name == "example89_tilde") return well_tilde_value(x);
  // All "free" entries.
  return CMat::Zero(n, n);
}

struct CatalogSpec {
  const char* name;
  int n;
};

constexpr CatalogSpec kCatalog[] = {
    {"free", 1},      {"free_neumann", 1},    {"free2", 2},
    {"example89", 1}, {"example89_tilde", 1}, {"bump2", 2},
};

bool catalog_known(const std::string& name) {
  for (const auto& c : kCatalog)
    if (name == c.name) return true;
  return false;
}

int catalog_n(const std::string& name) {
  for (const auto& c : kCatalog)
    if (name == c.name) return c.n;
  throw ValidationError("unknown catalog entry: " + name);
}

double catalog_support_end(const std::string& name) {
  if (name == "example89") return 17.0;
  if (name == "example89_tilde") return 20.0;
  return 0.0;
}

Problem bump2_problem() {
  const int n = 2;
  CMat mix(n, n);
  mix << cplx(1.0, 0.0), cplx(0.3, 0.15), cplx(0.3, -0.15), cplx(0.8, 0.0);
  std::vector<double> xs = uniform_grid(4.0, 2e-3);
  std::vector<CMat> V(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double b = (xs[i] * (4.0 - xs[i])) / 4.0;
    V[i] = (-kBump2Depth * b * b * b) * mix;
  }
  Problem p;
  p.potential = make_grid_potential(std::move(xs), std::move(V), 4.0);
  // Repulsive Robin data: with V ≡ 0 this boundary condition binds nothing, so
  // every bound state comes from the well itself.
  p.boundary.A = CMat::Identity(n, n);
  CMat B = CMat::Zero(n, n);
  B(0, 0) = 0.5;
  B(1, 1) = 1.5;
  p.boundary.B = B;
  return p;
}

void moments(const Potential& pot, double& m0, double& m1, double& m2) {
  m0 = m1 = m2 = 0.0;
  const double end = std::max(1.0, pot.support_end);
  const std::vector<double> xs = uniform_grid(end, 4e-3);
  double prev_x = xs[0];
  double prev_f = op_norm(sample(pot, xs[0]));
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double f = op_norm(sample(pot, xs[i]));
    const double h = xs[i] - prev_x;
    const double w0 = 0.5 * h * (prev_f + f);
    m0 += w0;
    m1 += 0.5 * h * ((1 + prev_x) * prev_f + (1 + xs[i]) * f);
    m2 += 0.5 * h * ((1 + prev_x) * (1 + prev_x) * prev_f + (1 + xs[i]) * (1 + xs[i]) * f);
    prev_x = xs[i];
    prev_f = f;
  }
}

}  // namespace

double BoundaryCondition::selfadjoint_residual() const {
  return op_norm(CMat(A.adjoint() * B - B.adjoint() * A));
}

double BoundaryCondition::definiteness_min_eig() const {
  const CMat H = hermitize(A.adjoint() * A + B.adjoint() * B);
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  return es.eigenvalues().minCoeff();
}

CMat sample(const Potential& pot, double x) {
  if (x < 0.0) x = 0.0;
  if (x > pot.support_end) return CMat::Zero(pot.n, pot.n);
  if (pot.kind == PotentialKind::Catalog)
    return hermitize(catalog_value(pot.catalog, pot.n, x));
  return hermitize(eval_grid(*pot.cache, x));
}

Potential make_grid_potential(std::vector<double> x, std::vector<CMat> V,
                              double support_end) {
  if (x.size() < 2) throw ValidationError("grid potential needs at least 2 nodes");
  if (V.size() != x.size())
    throw ValidationError("grid potential: node count mismatch between x and V");
  if (std::fabs(x.front()) > 1e-12)
    throw ValidationError("grid potential: x must start at 0");
  x.front() = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i + 1] > x[i]))
      throw ValidationError("grid potential: x must be strictly increasing");
  const int n = static_cast<int>(V.front().rows());
  for (auto& node : V) {
    if (node.rows() != n || node.cols() != n)
      throw ValidationError("grid potential: inconsistent node dimensions");
    const double scale = std::max(1.0, node.cwiseAbs().maxCoeff());
    if ((node - node.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("grid potential: node value not hermitian");
    node = hermitize(node);
  }
  if (support_end > x.back() + 1e-12)
    throw ValidationError("grid potential: support_end exceeds grid end");
  support_end = std::min(support_end, x.back());

  Potential pot;
  pot.kind = PotentialKind::Grid;
  pot.n = n;
  pot.x = std::move(x);
  pot.V = std::move(V);
  pot.support_end = support_end;
  pot.cache = build_cache(pot.x, pot.V);
  return pot;
}

double x_max_for(const Potential& pot, double eps) {
  if (pot.kind == PotentialKind::Grid) return std::max(1.0, pot.support_end);
  const double end = pot.support_end;
  double last_above = 0.0;
  for (double t = 0.0; t <= end + 1e-12; t += 0.01)
    if (op_norm(sample(pot, t)) > eps) last_above = t;
  return std::max(1.0, std::min(end < 1.0 ? 1.0 : end, last_above + 0.01));
}

double l1_norm(const Potential& pot) {
  double m0, m1, m2;
  moments(pot, m0, m1, m2);
  return m0;
}

ValidationReport validate(const Problem& p) {
  ValidationReport rep;
  rep.selfadjoint_residual = p.boundary.selfadjoint_residual();
  const double bc_scale =
      std::max(1.0, op_norm(p.boundary.A) * op_norm(p.boundary.B));
  rep.selfadjoint_ok = rep.selfadjoint_residual <= 1e-10 * bc_scale;
  rep.definiteness_min_eig = p.boundary.definiteness_min_eig();
  const double emax = op_norm(CMat(p.boundary.A.adjoint() * p.boundary.A +
                                   p.boundary.B.adjoint() * p.boundary.B));
  rep.definiteness_ok = rep.definiteness_min_eig > 1e-12 * std::max(1.0, emax);
  moments(p.potential, rep.moment0, rep.moment1, rep.moment2);
  if (!rep.selfadjoint_ok)
    rep.warnings.push_back("boundary matrices violate A†B = B†A");
  if (!rep.definiteness_ok)
    rep.warnings.push_back("A†A + B†B is not positive definite");
  if (rep.moment2 > 1e3)
    rep.warnings.push_back("potential decays slowly: second moment exceeds 1e3");
  return rep;
}

void check_selfadjoint(const Problem& p) {
  const int n = p.n();
  if (p.boundary.A.rows() != n || p.boundary.A.cols() != n ||
      p.boundary.B.rows() != n || p.boundary.B.cols() != n)
    throw ValidationError("boundary matrices must be n×n for the potential's n");
  const ValidationReport rep = validate(p);
  if (!rep.selfadjoint_ok)
    throw ValidationError("boundary condition violates selfadjointness: A†B must equal B†A");
  if (!rep.definiteness_ok)
    throw ValidationError("boundary condition violates definiteness: A†A + B†B must be positive definite");
}

Problem with_gauge(const Problem& p, const CMat& T) {
  if (T.rows() != p.n() || T.cols() != p.n())
    throw ValidationError("gauge factor must be n×n");
  if (cond_number(T) > 1e12)
    throw ValidationError("gauge factor must be invertible");
  Problem q = p;
  q.boundary.A = p.boundary.A * T;
  q.boundary.B = p.boundary.B * T;
  return q;
}

Problem catalog_problem(const std::string& name) {
  if (!catalog_known(name)) throw ValidationError("unknown catalog entry: " + name);
  if (name == "bump2") return bump2_problem();
  const int n = catalog_n(name);
  Problem p;
  p.potential.kind = PotentialKind::Catalog;
  p.potential.n = n;
  p.potential.catalog = name;
  p.potential.support_end = catalog_support_end(name);
  CMat A = CMat::Zero(n, n), B = CMat::Zero(n, n);
  if (name == "free_neumann") {
    A(0, 0) = 1.0;
  } else if (name == "free2") {
    A(0, 0) = 1.0;
    B(1, 1) = -1.0;
  } else {
    // Dirichlet: free, example89, example89_tilde.
    for (int i = 0; i < n; ++i) B(i, i) = -1.0;
  }
  p.boundary.A = A;
  p.boundary.B = B;
  return p;
}

std::vector<std::string> catalog_names() {
  std::vector<std::string> names;
  for (const auto& c : kCatalog) names.emplace_back(c.name);
  return names;
}

std::string problem_to_json_string(const Problem& p) {
  JsonWriter w;
  w.begin_object();
  w.key("n");
  w.value(p.n());
  w.key("kind");
  w.value(std::string(p.potential.kind == PotentialKind::Grid ? "grid" : "catalog"));
  if (p.potential.kind == PotentialKind::Catalog) {
    w.key("catalog");
    w.value(p.potential.catalog);
  }
  w.key("x");
  w.begin_array();
  for (double xv : p.potential.x) w.value(xv);
  w.end_array();
  w.key("V");
  w.begin_array();
  for (const CMat& node : p.potential.V) w.value_cmat(node);
  w.end_array();
  w.key("support_end");
  w.value(p.potential.support_end);
  w.key("boundary");
  w.begin_object();
  w.key("A");
  w.value_cmat(p.boundary.A);
  w.key("B");
  w.value_cmat(p.boundary.B);
  w.end_object();
  w.end_object();
  return w.str();
}

Problem problem_from_json_string(const std::string& text) {
  const nlohmann::json j = parse_json(text, "problem");
  if (!j.is_object()) throw ValidationError("problem: expected a JSON object");
  if (!j.contains("n") || !j.contains("kind") || !j.contains("support_end") ||
      !j.contains("boundary"))
    throw ValidationError("problem: missing required field (n, kind, support_end, boundary)");
  const int n = read_int(j.at("n"), "problem.n");
  if (n < 1) throw ValidationError("problem.n: must be at least 1");
  const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  const double support_end = read_double(j.at("support_end"), "problem.support_end");

  Problem p;
  if (kind == "catalog") {
    if (!j.contains("catalog") || !j.at("catalog").is_string())
      throw ValidationError("problem: catalog kind needs a catalog name");
    const std::string name = j.at("catalog").get<std::string>();
    if (!catalog_known(name)) throw ValidationError("unknown catalog entry: " + name);
    if (catalog_problem(name).potential.kind != PotentialKind::Catalog)
      throw ValidationError("catalog entry " + name + " is grid-backed; save it as kind \"grid\"");
    if (catalog_n(name) != n)
      throw ValidationError("problem.n does not match catalog entry " + name);
    p.potential.kind = PotentialKind::Catalog;
    p.potential.n = n;
    p.potential.catalog = name;
    p.potential.support_end = support_end;
  } else if (kind == "grid") {
    if (!j.contains("x") || !j.at("x").is_array() || !j.contains("V") ||
        !j.at("V").is_array())
      throw ValidationError("problem: grid kind needs x and V arrays");
    const auto& jx = j.at("x");
    const auto& jV = j.at("V");
    if (jx.size() != jV.size())
      throw ValidationError("problem: x and V must have the same length");
    std::vector<double> xs(jx.size());
    for (std::size_t i = 0; i < jx.size(); ++i)
      xs[i] = read_double(jx[i], "problem.x");
    std::vector<CMat> V(jV.size());
    for (std::size_t i = 0; i < jV.size(); ++i)
      V[i] = read_cmat(jV[i], n, n, "problem.V node " + std::to_string(i));
    p.potential = make_grid_potential(std::move(xs), std::move(V), support_end);
  } else {
    throw ValidationError("problem.kind: expected \"grid\" or \"catalog\"");
  }

  const auto& jb = j.at("boundary");
  if (!jb.is_object() || !jb.contains("A") || !jb.contains("B"))
    throw ValidationError("problem.boundary: expected object with A and B");
  p.boundary.A = read_cmat(jb.at("A"), n, n, "problem.boundary.A");
  p.boundary.B = read_cmat(jb.at("B"), n, n, "problem.boundary.B");
  return p;
}

Problem load_problem(const std::string& path) {
  return problem_from_json_string(slurp_file(path));
}

void save_problem(const Problem& p, const std::string& path) {
  spit_file(path, problem_to_json_string(p) + "\n");
}

}  // namespace specsurg
