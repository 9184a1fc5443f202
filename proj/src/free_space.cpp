#include "freelip/free_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freelip/linear_program.hpp"
#include "freelip/min_cost_flow.hpp"

namespace freelip {

namespace {

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (a.get() != b.get()) throw Error(std::string(what) + ": mismatched space reference");
}

// Support of x plus the base point, ascending.
std::vector<int> restricted_points(const FreeVector& x) {
  std::vector<int> pts;
  const int n = x.space->size();
  for (int i = 0; i < n; ++i)
    if (i == x.space->base() || x.coeff[i] != 0.0) pts.push_back(i);
  return pts;
}

struct RestrictedSolve {
  std::vector<int> pts;          // original indices
  FlowResult flow;               // on the complete digraph over pts
  double primal_value = 0.0;
};

// Transshipment on the support: node r must have net divergence coeff[r],
// the base absorbs the remainder. Exact for the full space because direct
// arcs are never beaten through outside points (triangle inequality).
RestrictedSolve solve_primal(const FreeVector& x) {
  RestrictedSolve rs;
  rs.pts = restricted_points(x);
  const int k = static_cast<int>(rs.pts.size());
  FlowNetwork net;
  net.nodes = k;
  net.imbalance.assign(k, 0.0);
  double sum = 0.0;
  int base_local = -1;
  for (int i = 0; i < k; ++i) {
    if (rs.pts[i] == x.space->base()) base_local = i;
    net.imbalance[i] = x.coeff[rs.pts[i]];
    sum += net.imbalance[i];
  }
  net.imbalance[base_local] -= sum;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) net.arcs.push_back({i, j, x.space->dist(rs.pts[i], rs.pts[j])});
  rs.flow = mcf_solve(net);
  rs.primal_value = rs.flow.total_cost;
  return rs;
}

}  // namespace

FreeVector::FreeVector(SpacePtr s, std::vector<double> c) : space(std::move(s)), coeff(std::move(c)) {
  if (!space) throw Error("FreeVector: null space");
  if (static_cast<int>(coeff.size()) != space->size()) throw Error("FreeVector: coefficient size mismatch");
  for (double v : coeff)
    if (!std::isfinite(v)) throw Error("FreeVector: non-finite coefficient");
  if (coeff[space->base()] != 0.0) throw Error("FreeVector: base coefficient must be zero");
}

FreeVector& FreeVector::operator+=(const FreeVector& o) {
  require_same_space(space, o.space, "FreeVector::operator+=");
  for (size_t i = 0; i < coeff.size(); ++i) coeff[i] += o.coeff[i];
  return *this;
}

FreeVector& FreeVector::operator-=(const FreeVector& o) {
  require_same_space(space, o.space, "FreeVector::operator-=");
  for (size_t i = 0; i < coeff.size(); ++i) coeff[i] -= o.coeff[i];
  return *this;
}

FreeVector& FreeVector::operator*=(double s) {
  for (auto& v : coeff) v *= s;
  return *this;
}

FreeVector operator+(FreeVector a, const FreeVector& b) { return a += b; }
FreeVector operator-(FreeVector a, const FreeVector& b) { return a -= b; }
FreeVector operator*(double s, FreeVector a) { return a *= s; }

FreeVector delta(const SpacePtr& space, int p) {
  std::vector<double> c(space->size(), 0.0);
  if (p != space->base()) c[p] = 1.0;
  return FreeVector(space, std::move(c));
}

FreeVector Molecule::vector() const {
  std::vector<double> c(space->size(), 0.0);
  const double d = space->dist(p, q);
  if (p != space->base()) c[p] = 1.0 / d;
  if (q != space->base()) c[q] = -1.0 / d;
  return FreeVector(space, std::move(c));
}

std::vector<double> Molecule::norming_potential() const {
  std::vector<double> f(space->size(), 0.0);
  const double shift = space->dist(space->base(), q);
  for (int i = 0; i < space->size(); ++i) f[i] = space->dist(i, q) - shift;
  return f;
}

bool same_pair(const Molecule& a, const Molecule& b) { return a.p == b.p && a.q == b.q; }
bool same_unordered_pair(const Molecule& a, const Molecule& b) {
  return (a.p == b.p && a.q == b.q) || (a.p == b.q && a.q == b.p);
}

std::vector<Molecule> molecule_set(const SpacePtr& space) {
  std::vector<Molecule> out;
  const int n = space->size();
  out.reserve(n * (n - 1));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (p != q) out.push_back({space, p, q});
  return out;
}

std::vector<Molecule> molecule_set_unordered(const SpacePtr& space) {
  std::vector<Molecule> out;
  const int n = space->size();
  out.reserve(n * (n - 1) / 2);
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) out.push_back({space, p, q});
  return out;
}

int molecule_index(const PointedMetricSpace& space, int p, int q) {
  const int n = space.size();
  if (p < 0 || q < 0 || p >= n || q >= n || p == q) throw Error("molecule_index: bad pair");
  return p * (n - 1) + (q < p ? q : q - 1);
}

double pair_with(const std::vector<double>& f, const FreeVector& x) {
  double v = 0.0;
  for (size_t i = 0; i < x.coeff.size(); ++i) v += f[i] * x.coeff[i];
  return v;
}

double pair_with(const std::vector<double>& f, const Molecule& m) {
  return (f[m.p] - f[m.q]) / m.space->dist(m.p, m.q);
}

bool NormCertificate::verify(const PointedMetricSpace& m, const std::vector<double>& coeff,
                             double tol) const {
  const double eps = tol * scale;
  if (dual_potential.size() != static_cast<size_t>(m.size())) return false;
  if (std::abs(dual_potential[m.base()]) > eps) return false;
  for (int i = 0; i < m.size(); ++i)
    for (int j = i + 1; j < m.size(); ++j)
      if (std::abs(dual_potential[i] - dual_potential[j]) > m.dist(i, j) + 10 * eps) return false;
  double flow_cost = 0.0;
  std::vector<double> div(m.size(), 0.0);
  for (const auto& a : primal) {
    if (a.weight < -eps) return false;
    flow_cost += a.weight * m.dist(a.p, a.q);
    div[a.p] += a.weight;
    div[a.q] -= a.weight;
  }
  for (int i = 0; i < m.size(); ++i)
    if (i != m.base() && std::abs(div[i] - coeff[i]) > 10 * eps) return false;
  double pairing = 0.0;
  for (int i = 0; i < m.size(); ++i) pairing += dual_potential[i] * coeff[i];
  if (std::abs(flow_cost - primal_value) > 10 * eps) return false;
  if (std::abs(pairing - dual_value) > 10 * eps) return false;
  return std::abs(primal_value - dual_value) <= 10 * eps && gap <= eps;
}

NormCertificate free_norm(const FreeVector& x) {
  NormCertificate cert;
  const auto& m = *x.space;
  double cmax = 0.0;
  for (double v : x.coeff) cmax = std::max(cmax, std::abs(v));
  cert.scale = 1.0 + cmax + m.max_dist();
  cert.dual_potential.assign(m.size(), 0.0);
  if (cmax == 0.0) return cert;  // the zero vector

  auto rs = solve_primal(x);
  const int k = static_cast<int>(rs.pts.size());
  for (size_t a = 0; a < rs.flow.flow.size(); ++a) {
    if (rs.flow.flow[a] <= 0.0) continue;
    const int i = static_cast<int>(a) / (k - 1);
    // Arc list order is (i,j) for all j != i; recover j from position.
    const int off = static_cast<int>(a) % (k - 1);
    const int j = off < i ? off : off + 1;
    cert.primal.push_back({rs.pts[i], rs.pts[j], rs.flow.flow[a]});
  }
  cert.primal_value = rs.primal_value;

  // Independent dual route: the 1-Lipschitz potential LP on the support.
  int base_local = -1;
  for (int i = 0; i < k; ++i)
    if (rs.pts[i] == m.base()) base_local = i;
  // Variables: f at the non-base support points.
  std::vector<int> var_of(k, -1);
  int nv = 0;
  for (int i = 0; i < k; ++i)
    if (i != base_local) var_of[i] = nv++;
  LinearProgram lp(nv, Sense::Maximize);
  for (int i = 0; i < k; ++i)
    if (i != base_local) lp.objective[var_of[i]] = x.coeff[rs.pts[i]];
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      std::vector<double> row(nv, 0.0);
      if (var_of[i] >= 0) row[var_of[i]] = 1.0;
      if (var_of[j] >= 0) row[var_of[j]] = -1.0;
      const double d = m.dist(rs.pts[i], rs.pts[j]);
      lp.add_row(row, Relation::LessEq, d);
      for (auto& v : row) v = -v;
      lp.add_row(row, Relation::LessEq, d);
    }
  auto sol = lp_solve(lp);
  if (sol.status != LpStatus::Optimal) throw Error("free_norm: dual LP failed");
  cert.dual_value = sol.objective;

  // McShane extension of the support potential to all of M.
  std::vector<double> f_support(k, 0.0);
  for (int i = 0; i < k; ++i)
    if (i != base_local) f_support[i] = sol.x[var_of[i]];
  for (int r = 0; r < m.size(); ++r) {
    double v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) v = std::min(v, f_support[i] + m.dist(r, rs.pts[i]));
    cert.dual_potential[r] = v;
  }
  cert.dual_potential[m.base()] = 0.0;

  cert.gap = std::abs(cert.primal_value - cert.dual_value);
  cert.value = cert.primal_value;
  if (cert.gap > 1e-8 * cert.scale) throw Error("free_norm: duality gap beyond tolerance");
  return cert;
}

double free_norm_value(const FreeVector& x) {
  double cmax = 0.0;
  for (double v : x.coeff) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) return 0.0;
  return solve_primal(x).primal_value;
}

double molecule_distance(const Molecule& a, const Molecule& b) {
  require_same_space(a.space, b.space, "molecule_distance");
  return free_norm_value(a.vector() - b.vector());
}

bool is_ball_vertex(const PointedMetricSpace& space, int p, int q, double strict_tol) {
  const double eps = strict_tol * space.scale();
  for (int z = 0; z < space.size(); ++z) {
    if (z == p || z == q) continue;
    if (space.dist(p, q) >= space.dist(p, z) + space.dist(z, q) - eps) return false;
  }
  return true;
}

std::vector<Molecule> ball_vertices(const SpacePtr& space, double strict_tol) {
  std::vector<Molecule> out;
  for (const auto& m : molecule_set(space))
    if (is_ball_vertex(*space, m.p, m.q, strict_tol)) out.push_back(m);
  return out;
}

std::vector<DecompositionAtom> convex_decompose(const FreeVector& x, double tol) {
  const auto& m = *x.space;
  const int n = m.size();
  const auto atoms = ball_vertices(x.space);
  const int na = static_cast<int>(atoms.size());
  std::vector<std::vector<double>> cols(na);  // non-base coordinates per atom
  std::vector<int> coord_of(n, -1);
  int nc = 0;
  for (int i = 0; i < n; ++i)
    if (i != m.base()) coord_of[i] = nc++;
  for (int a = 0; a < na; ++a) {
    auto vec = atoms[a].vector();
    cols[a].assign(nc, 0.0);
    for (int i = 0; i < n; ++i)
      if (coord_of[i] >= 0) cols[a][coord_of[i]] = vec.coeff[i];
  }
  std::vector<double> target(nc, 0.0);
  for (int i = 0; i < n; ++i)
    if (coord_of[i] >= 0) target[coord_of[i]] = x.coeff[i];

  bool zero = true;
  for (double v : target)
    if (v != 0.0) zero = false;
  if (zero) return {};

  auto reconstruction_lp = [&](int first_atom, const std::vector<double>& rhs,
                               std::optional<double> total) {
    const int nv = na - first_atom;
    LinearProgram lp(nv, total ? Sense::Maximize : Sense::Minimize);
    for (int j = 0; j < nv; ++j) lp.lower[j] = 0.0;
    for (int r = 0; r < nc; ++r) {
      std::vector<double> row(nv, 0.0);
      for (int j = 0; j < nv; ++j) row[j] = cols[first_atom + j][r];
      lp.add_row(row, Relation::Equal, rhs[r]);
    }
    if (total) {
      lp.add_row(std::vector<double>(nv, 1.0), Relation::Equal, *total);
      lp.objective[0] = 1.0;  // maximize the first remaining weight
    } else {
      for (int j = 0; j < nv; ++j) lp.objective[j] = 1.0;
    }
    return lp;
  };

  auto first = lp_solve(reconstruction_lp(0, target, std::nullopt));
  if (first.status != LpStatus::Optimal) throw Error("convex_decompose: reconstruction LP failed");
  const double total_weight = first.objective;
  if (total_weight > 1.0 + tol) throw Error("convex_decompose: outside ball");

  // Greedy canonicalization: maximize each weight in molecule-index order
  // subject to keeping the total minimal.
  std::vector<double> weights(na, 0.0);
  std::vector<double> residual = target;
  double budget = total_weight;
  for (int j = 0; j < na; ++j) {
    if (budget <= 1e-13 * (1.0 + total_weight)) break;
    if (j == na - 1) {
      weights[j] = budget;
      break;
    }
    auto step = lp_solve(reconstruction_lp(j, residual, budget));
    if (step.status != LpStatus::Optimal) throw Error("convex_decompose: canonicalization LP failed");
    const double w = std::max(0.0, step.x[0]);
    weights[j] = w;
    if (w > 0.0) {
      for (int r = 0; r < nc; ++r) residual[r] -= w * cols[j][r];
      budget -= w;
    }
  }

  std::vector<DecompositionAtom> out;
  std::vector<double> recon(nc, 0.0);
  for (int a = 0; a < na; ++a) {
    if (weights[a] <= 1e-12) continue;
    out.push_back({atoms[a], weights[a]});
    for (int r = 0; r < nc; ++r) recon[r] += weights[a] * cols[a][r];
  }
  for (int r = 0; r < nc; ++r)
    if (std::abs(recon[r] - target[r]) > 1e-9) throw Error("convex_decompose: reconstruction residual");
  return out;
}

}  // namespace freelip
