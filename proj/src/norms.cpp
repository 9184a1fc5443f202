#include "freelip/norms.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "freelip/linear_program.hpp"

namespace freelip {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_dim(const NormSpec& spec, const std::vector<double>& v, const char* what) {
  if (static_cast<int>(v.size()) != spec.dim)
    throw Error(std::string(what) + ": dimension mismatch (got " + std::to_string(v.size()) +
                ", spec has " + std::to_string(spec.dim) + ")");
}

std::vector<std::vector<double>> sign_vectors(int dim) {
  std::vector<std::vector<double>> out;
  out.reserve(1u << dim);
  for (int mask = 0; mask < (1 << dim); ++mask) {
    std::vector<double> v(dim, 1.0);
    for (int c = 0; c < dim; ++c)
      if (mask & (1 << c)) v[c] = -1.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> unit_vectors(int dim, bool both_signs) {
  std::vector<std::vector<double>> out;
  for (int c = 0; c < dim; ++c) {
    std::vector<double> v(dim, 0.0);
    v[c] = 1.0;
    out.push_back(v);
    if (both_signs) {
      v[c] = -1.0;
      out.push_back(v);
    }
  }
  return out;
}

bool nearly_equal(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

void dedupe(std::vector<std::vector<double>>& vecs, double tol) {
  std::vector<std::vector<double>> out;
  for (auto& v : vecs) {
    bool seen = false;
    for (const auto& w : out)
      if (nearly_equal(v, w, tol)) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(std::move(v));
  }
  vecs = std::move(out);
}

// All hyperplanes <h, x> = 1 through dim of the given points with every point
// on the <= 1 side; used in both directions of the V/H conversion.
std::vector<std::vector<double>> supporting_hyperplanes(
    const std::vector<std::vector<double>>& pts, int dim) {
  std::vector<std::vector<double>> out;
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(dim);
  std::vector<int> stack;
  stack.push_back(0);
  // Enumerate dim-subsets lexicographically.
  std::vector<int> comb(dim, 0);
  for (int i = 0; i < dim; ++i) comb[i] = i;
  if (n < dim) return out;
  for (;;) {
    Eigen::MatrixXd a(dim, dim);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) a(r, c) = pts[comb[r]][c];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
      Eigen::VectorXd h = lu.solve(one);
      bool ok = true;
      for (const auto& p : pts) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) s += h(c) * p[c];
        if (s > 1.0 + 1e-9) {
          ok = false;
          break;
        }
      }
      if (ok) {
        std::vector<double> hv(dim);
        for (int c = 0; c < dim; ++c) hv[c] = h(c);
        out.push_back(std::move(hv));
      }
    }
    // next combination
    int i = dim - 1;
    while (i >= 0 && comb[i] == n - dim + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < dim; ++j) comb[j] = comb[j - 1] + 1;
  }
  dedupe(out, 1e-9);
  return out;
}

// Vertices of {x : <g, x> <= 1 for all facets g}: intersections of dim facets
// that satisfy every other facet and are actually tight.
std::vector<std::vector<double>> vertices_from_facets(
    const std::vector<std::vector<double>>& facets, int dim) {
  std::vector<std::vector<double>> out;
  const int n = static_cast<int>(facets.size());
  if (n < dim) return out;
  std::vector<int> comb(dim);
  for (int i = 0; i < dim; ++i) comb[i] = i;
  for (;;) {
    Eigen::MatrixXd a(dim, dim);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) a(r, c) = facets[comb[r]][c];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
      Eigen::VectorXd v = lu.solve(one);
      bool ok = true;
      for (const auto& g : facets) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) s += g[c] * v(c);
        if (s > 1.0 + 1e-9) {
          ok = false;
          break;
        }
      }
      if (ok) {
        std::vector<double> vv(dim);
        for (int c = 0; c < dim; ++c) vv[c] = v(c);
        out.push_back(std::move(vv));
      }
    }
    int i = dim - 1;
    while (i >= 0 && comb[i] == n - dim + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < dim; ++j) comb[j] = comb[j - 1] + 1;
  }
  dedupe(out, 1e-9);
  return out;
}

std::vector<std::vector<double>> yk_vertices(int k) {
  const double a = 1.0 - 1.0 / k;
  return {{0, 1}, {1, a}, {-1, a}, {0, -1}, {-1, -a}, {1, -a}};
}

std::vector<std::vector<double>> yk_facets(int k) {
  const double inv = 1.0 / k;
  return {{1, 0}, {inv, 1}, {-inv, 1}, {-1, 0}, {-inv, -1}, {inv, -1}};
}

}  // namespace

NormSpec NormSpec::lp(int dim, double p) {
  if (p < 1.0) throw Error("NormSpec::lp: p must be >= 1");
  NormSpec s;
  s.variant = Variant::Lp;
  s.dim = dim;
  s.p = p;
  return s;
}

NormSpec NormSpec::linf(int dim) {
  NormSpec s;
  s.variant = Variant::Linf;
  s.dim = dim;
  return s;
}

NormSpec NormSpec::l1(int dim) {
  NormSpec s;
  s.variant = Variant::L1;
  s.dim = dim;
  return s;
}

NormSpec NormSpec::yk(int k) {
  if (k < 2) throw Error("NormSpec::yk: k must be >= 2");
  NormSpec s;
  s.variant = Variant::Yk;
  s.dim = 2;
  s.k = k;
  return s;
}

NormSpec NormSpec::scalar() { return linf(1); }

NormSpec NormSpec::polyhedral_facets(std::vector<std::vector<double>> facets) {
  NormSpec s;
  s.variant = Variant::Polyhedral;
  if (facets.empty()) throw Error("polyhedral norm needs at least one facet");
  s.dim = static_cast<int>(facets.front().size());
  s.facets = std::move(facets);
  validate_spec(s);
  return s;
}

NormSpec NormSpec::polyhedral_vertices(std::vector<std::vector<double>> vertices) {
  NormSpec s;
  s.variant = Variant::Polyhedral;
  if (vertices.empty()) throw Error("polyhedral norm needs at least one vertex");
  s.dim = static_cast<int>(vertices.front().size());
  s.vertices = std::move(vertices);
  validate_spec(s);
  return s;
}

std::string NormSpec::describe() const {
  std::ostringstream os;
  switch (variant) {
    case Variant::Lp: os << "lp(" << p << ")^" << dim; break;
    case Variant::Linf: os << "linf^" << dim; break;
    case Variant::L1: os << "l1^" << dim; break;
    case Variant::Yk: os << "yk(" << k << ")"; break;
    case Variant::Polyhedral: os << "polyhedral^" << dim; break;
  }
  return os.str();
}

void validate_spec(const NormSpec& spec) {
  if (spec.dim < 1) throw Error("NormSpec: dimension must be positive");
  if (spec.variant != NormSpec::Variant::Polyhedral) return;
  auto check_symmetric = [&](const std::vector<std::vector<double>>& set, const char* what) {
    for (const auto& v : set) {
      if (static_cast<int>(v.size()) != spec.dim) throw Error(std::string(what) + ": bad dimension");
      std::vector<double> neg(v.size());
      for (size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
      bool found = false;
      for (const auto& w : set)
        if (nearly_equal(neg, w, 1e-9)) found = true;
      if (!found) throw Error(std::string(what) + ": set is not symmetric");
    }
  };
  if (!spec.facets.empty()) check_symmetric(spec.facets, "polyhedral facets");
  if (!spec.vertices.empty()) check_symmetric(spec.vertices, "polyhedral vertices");
  if (spec.facets.empty() && spec.vertices.empty())
    throw Error("polyhedral norm needs facets or vertices");
  // Boundedness / spanning via the derived description.
  auto desc = ball_description(spec);
  if (static_cast<int>(desc.vertices.size()) < 2 * spec.dim)
    throw Error("polyhedral ball has too few vertices to span");
}

double norm_eval(const NormSpec& spec, const std::vector<double>& v) {
  require_dim(spec, v, "norm_eval");
  switch (spec.variant) {
    case NormSpec::Variant::Lp: {
      double s = 0.0;
      for (double c : v) s += std::pow(std::abs(c), spec.p);
      return std::pow(s, 1.0 / spec.p);
    }
    case NormSpec::Variant::Linf: {
      double s = 0.0;
      for (double c : v) s = std::max(s, std::abs(c));
      return s;
    }
    case NormSpec::Variant::L1: {
      double s = 0.0;
      for (double c : v) s += std::abs(c);
      return s;
    }
    case NormSpec::Variant::Yk:
      return std::max(std::abs(v[0]), std::abs(v[1]) + std::abs(v[0]) / spec.k);
    case NormSpec::Variant::Polyhedral: {
      if (!spec.facets.empty()) {
        double s = 0.0;
        for (const auto& g : spec.facets) s = std::max(s, dot(g, v));
        return s;
      }
      // Vertex gauge: minimal total weight representing v over the vertices.
      const int nv = static_cast<int>(spec.vertices.size());
      LinearProgram lp(nv, Sense::Minimize);
      for (int j = 0; j < nv; ++j) {
        lp.lower[j] = 0.0;
        lp.objective[j] = 1.0;
      }
      for (int r = 0; r < spec.dim; ++r) {
        std::vector<double> row(nv, 0.0);
        for (int j = 0; j < nv; ++j) row[j] = spec.vertices[j][r];
        lp.add_row(row, Relation::Equal, v[r]);
      }
      auto sol = lp_solve(lp);
      if (sol.status != LpStatus::Optimal) throw Error("norm_eval: vertex gauge LP failed");
      return sol.objective;
    }
  }
  throw Error("norm_eval: unreachable");
}

double dual_eval(const NormSpec& spec, const std::vector<double>& f) {
  require_dim(spec, f, "dual_eval");
  switch (spec.variant) {
    case NormSpec::Variant::Lp: {
      if (spec.p == 1.0) return norm_eval(NormSpec::linf(spec.dim), f);
      const double q = spec.p / (spec.p - 1.0);
      double s = 0.0;
      for (double c : f) s += std::pow(std::abs(c), q);
      return std::pow(s, 1.0 / q);
    }
    case NormSpec::Variant::Linf:
      return norm_eval(NormSpec::l1(spec.dim), f);
    case NormSpec::Variant::L1:
      return norm_eval(NormSpec::linf(spec.dim), f);
    default: {
      double s = 0.0;
      for (const auto& v : ball_description(spec).vertices) s = std::max(s, dot(f, v));
      return s;
    }
  }
}

BallDescription ball_description(const NormSpec& spec) {
  if (!spec.is_polyhedral()) throw Error("ball_description: non-polyhedral norm");
  BallDescription d;
  switch (spec.variant) {
    case NormSpec::Variant::Linf:
      d.vertices = sign_vectors(spec.dim);
      d.facets = unit_vectors(spec.dim, true);
      break;
    case NormSpec::Variant::L1:
      d.vertices = unit_vectors(spec.dim, true);
      d.facets = sign_vectors(spec.dim);
      break;
    case NormSpec::Variant::Yk:
      d.vertices = yk_vertices(spec.k);
      d.facets = yk_facets(spec.k);
      break;
    case NormSpec::Variant::Polyhedral:
      if (!spec.vertices.empty()) {
        d.vertices = spec.vertices;
        d.facets = spec.facets.empty() ? supporting_hyperplanes(spec.vertices, spec.dim)
                                       : spec.facets;
      } else {
        d.facets = spec.facets;
        d.vertices = vertices_from_facets(spec.facets, spec.dim);
      }
      break;
    default:
      break;
  }
  if (d.vertices.empty() || d.facets.empty())
    throw Error("ball_description: degenerate polyhedral ball");
  // Consistency: each facet supported with max exactly 1, each vertex on a facet.
  for (const auto& g : d.facets) {
    double mx = -kInf;
    for (const auto& v : d.vertices) mx = std::max(mx, dot(g, v));
    if (std::abs(mx - 1.0) > 1e-12 * (1.0 + std::abs(mx)))
      throw Error("ball_description: facet not supported at value 1");
  }
  for (const auto& v : d.vertices) {
    double mx = -kInf;
    for (const auto& g : d.facets) mx = std::max(mx, dot(g, v));
    if (std::abs(mx - 1.0) > 1e-12 * (1.0 + std::abs(mx)))
      throw Error("ball_description: vertex not on the unit sphere");
  }
  return d;
}

BetaWitness beta_witness(const NormSpec& spec) {
  if (!spec.is_polyhedral())
    throw Error("beta_witness: no witness extracted (non-polyhedral target)");
  auto desc = ball_description(spec);
  // One representative per +- facet class: keep the lexicographically larger.
  std::vector<std::vector<double>> reps;
  for (const auto& g : desc.facets) {
    bool positive = false;
    for (double c : g) {
      if (c > 1e-12) {
        positive = true;
        break;
      }
      if (c < -1e-12) break;
    }
    if (positive) reps.push_back(g);
  }
  BetaWitness w;
  for (const auto& g : reps) {
    std::vector<double> center(spec.dim, 0.0);
    int touching = 0;
    for (const auto& v : desc.vertices)
      if (dot(g, v) >= 1.0 - 1e-9) {
        ++touching;
        for (int c = 0; c < spec.dim; ++c) center[c] += v[c];
      }
    if (touching == 0) throw Error("beta_witness: unsupported facet");
    for (auto& c : center) c /= touching;
    w.pairs.push_back({g, std::move(center)});
  }
  w.rho = 0.0;
  for (size_t a = 0; a < w.pairs.size(); ++a)
    for (size_t b = 0; b < w.pairs.size(); ++b)
      if (a != b) w.rho = std::max(w.rho, std::abs(dot(w.pairs[a].functional, w.pairs[b].point)));
  if (w.rho >= 1.0 - 1e-9) throw Error("beta_witness: separation failed (rho too close to 1)");
  return w;
}

void validate_beta_witness(const NormSpec& spec, const BetaWitness& w, Rng& rng, double tol) {
  for (const auto& pr : w.pairs) {
    if (std::abs(dual_eval(spec, pr.functional) - 1.0) > tol)
      throw Error("beta witness: functional not dual-norm one");
    if (std::abs(norm_eval(spec, pr.point) - 1.0) > tol)
      throw Error("beta witness: point not norm one");
    if (std::abs(dot(pr.functional, pr.point) - 1.0) > tol)
      throw Error("beta witness: pair action not one");
  }
  for (size_t a = 0; a < w.pairs.size(); ++a)
    for (size_t b = 0; b < w.pairs.size(); ++b)
      if (a != b && std::abs(dot(w.pairs[a].functional, w.pairs[b].point)) > w.rho + tol)
        throw Error("beta witness: cross evaluation exceeds rho");
  for (int probe = 0; probe < 64; ++probe) {
    std::vector<double> y(spec.dim);
    for (auto& c : y) c = rng.uniform(-2.0, 2.0);
    double sup = 0.0;
    for (const auto& pr : w.pairs) sup = std::max(sup, std::abs(dot(pr.functional, y)));
    if (std::abs(sup - norm_eval(spec, y)) > tol * (1.0 + sup))
      throw Error("beta witness: functionals do not norm the space");
  }
}

void validate_quasi_beta(const NormSpec& spec, const QuasiBetaWitness& w, double tol) {
  const size_t na = w.functionals.size();
  if (w.sigma.size() != na || w.rho.size() != na)
    throw Error("quasi-beta witness: A, sigma, rho sizes differ");
  for (size_t i = 0; i < na; ++i) {
    if (std::abs(dual_eval(spec, w.functionals[i]) - 1.0) > tol)
      throw Error("quasi-beta witness: functional not dual-norm one");
    if (std::abs(norm_eval(spec, w.sigma[i]) - 1.0) > tol)
      throw Error("quasi-beta witness: sigma value not norm one");
    if (std::abs(dot(w.functionals[i], w.sigma[i]) - 1.0) > tol)
      throw Error("quasi-beta witness: y*(sigma(y*)) != 1");
    if (!(w.rho[i] < 1.0)) throw Error("quasi-beta witness: rho must be < 1");
    for (size_t j = 0; j < na; ++j)
      if (j != i && std::abs(dot(w.functionals[j], w.sigma[i])) > w.rho[i] + tol)
        throw Error("quasi-beta witness: cross evaluation exceeds rho");
  }
  // Every extreme dual point must be covered by a subset with sup rho < 1 and
  // t e* in the (finite) subset within tolerance.
  auto dual_extremes = ball_description(spec).facets;
  for (const auto& e : dual_extremes) {
    bool covered = false;
    for (const auto& cov : w.covers) {
      if (!nearly_equal(cov.extreme, e, 1e-9)) continue;
      if (std::abs(std::abs(cov.t) - 1.0) > tol) throw Error("quasi-beta witness: |t| != 1");
      double sup_rho = 0.0;
      bool member = false;
      for (int idx : cov.indices) {
        if (idx < 0 || idx >= static_cast<int>(na)) throw Error("quasi-beta witness: bad index");
        sup_rho = std::max(sup_rho, w.rho[idx]);
        std::vector<double> te(e.size());
        for (size_t c = 0; c < e.size(); ++c) te[c] = cov.t * e[c];
        if (nearly_equal(w.functionals[idx], te, tol)) member = true;
      }
      if (sup_rho < 1.0 && member) covered = true;
    }
    if (!covered) throw Error("quasi-beta witness: extreme dual point not covered");
  }
}

std::vector<double> norming_functional(const NormSpec& spec, const std::vector<double>& v) {
  require_dim(spec, v, "norming_functional");
  const double nv = norm_eval(spec, v);
  if (nv <= 0.0) throw Error("norming_functional: zero vector");
  if (spec.variant == NormSpec::Variant::Lp) {
    std::vector<double> g(v.size(), 0.0);
    if (spec.p == 1.0) {
      for (size_t i = 0; i < v.size(); ++i) g[i] = v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
      return g;
    }
    for (size_t i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]) / nv;
      g[i] = (v[i] >= 0 ? 1.0 : -1.0) * std::pow(a, spec.p - 1.0);
    }
    const double dn = dual_eval(spec, g);
    for (auto& c : g) c /= dn;
    return g;
  }
  auto desc = ball_description(spec);
  int best = 0;
  double best_val = -kInf;
  for (size_t j = 0; j < desc.facets.size(); ++j) {
    const double s = dot(desc.facets[j], v);
    if (s > best_val + 1e-15) {
      best_val = s;
      best = static_cast<int>(j);
    }
  }
  return desc.facets[best];
}

}  // namespace freelip
