#include "freelip/exposing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freelip/linear_program.hpp"

namespace freelip {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Variables are f at non-base points; var_of[point] or -1 at base.
std::vector<int> potential_vars(const PointedMetricSpace& m) {
  std::vector<int> var_of(m.size(), -1);
  int nv = 0;
  for (int i = 0; i < m.size(); ++i)
    if (i != m.base()) var_of[i] = nv++;
  return var_of;
}

void add_lipschitz_rows(LinearProgram& lp, const PointedMetricSpace& m,
                        const std::vector<int>& var_of, int extra_vars) {
  const int nv = lp.num_vars();
  for (int i = 0; i < m.size(); ++i)
    for (int j = i + 1; j < m.size(); ++j) {
      std::vector<double> row(nv, 0.0);
      if (var_of[i] >= 0) row[var_of[i]] = 1.0;
      if (var_of[j] >= 0) row[var_of[j]] = -1.0;
      lp.add_row(row, Relation::LessEq, m.dist(i, j));
      for (int c = 0; c < nv - extra_vars; ++c) row[c] = -row[c];
      lp.add_row(row, Relation::LessEq, m.dist(i, j));
    }
}

}  // namespace

ExposureAnalysis::ExposureAnalysis(SpacePtr space, ExposeOptions opts)
    : space_(std::move(space)), opts_(opts) {}

const std::vector<Molecule>& ExposureAnalysis::vertices() {
  if (!vertices_) vertices_ = ball_vertices(space_, opts_.strict_tol);
  return *vertices_;
}

const std::vector<std::pair<int, int>>& ExposureAnalysis::edges() {
  if (edges_) return *edges_;
  const auto& verts = vertices();
  const auto& m = *space_;
  const int nv = static_cast<int>(verts.size());
  std::vector<std::vector<double>> coords(nv);
  std::vector<int> coord_of(m.size(), -1);
  int nc = 0;
  for (int i = 0; i < m.size(); ++i)
    if (i != m.base()) coord_of[i] = nc++;
  for (int a = 0; a < nv; ++a) {
    auto vec = verts[a].vector();
    coords[a].assign(nc, 0.0);
    for (int i = 0; i < m.size(); ++i)
      if (coord_of[i] >= 0) coords[a][coord_of[i]] = vec.coeff[i];
  }
  // Midpoint oracle: a pair spans an edge iff its midpoint cannot be written
  // as a convex combination of the remaining vertices.
  edges_.emplace();
  for (int a = 0; a < nv; ++a)
    for (int b = a + 1; b < nv; ++b) {
      LinearProgram lp(nv - 2, Sense::Minimize);
      for (int j = 0; j < nv - 2; ++j) lp.lower[j] = 0.0;
      for (int r = 0; r < nc; ++r) {
        std::vector<double> row;
        row.reserve(nv - 2);
        for (int j = 0; j < nv; ++j)
          if (j != a && j != b) row.push_back(coords[j][r]);
        lp.add_row(std::move(row), Relation::Equal,
                   0.5 * (coords[a][r] + coords[b][r]));
      }
      lp.add_row(std::vector<double>(nv - 2, 1.0), Relation::Equal, 1.0);
      if (lp_solve(lp).status == LpStatus::Infeasible) edges_->emplace_back(a, b);
    }
  return *edges_;
}

ExposureCertificate ExposureAnalysis::solve_exposing(const Molecule& mol) {
  const auto& m = *space_;
  ExposureCertificate cert;
  cert.m = mol;

  std::vector<Molecule> competitors;
  for (const auto& other : molecule_set(space_))
    if (!same_unordered_pair(other, mol)) competitors.push_back(other);

  if (competitors.empty()) {
    cert.f = mol.norming_potential();
    cert.rho_gap = kNegInf;
    cert.feasible = true;
    return cert;
  }

  auto var_of = potential_vars(m);
  const int nf = m.size() - 1;
  // Variables: f values then the margin s.
  LinearProgram lp(nf + 1, Sense::Maximize);
  lp.objective[nf] = 1.0;
  add_lipschitz_rows(lp, m, var_of, /*extra_vars=*/1);
  {
    std::vector<double> row(nf + 1, 0.0);
    if (var_of[mol.p] >= 0) row[var_of[mol.p]] = 1.0;
    if (var_of[mol.q] >= 0) row[var_of[mol.q]] = -1.0;
    lp.add_row(std::move(row), Relation::Equal, m.dist(mol.p, mol.q));
  }
  for (const auto& c : competitors) {
    const double d = m.dist(c.p, c.q);
    std::vector<double> row(nf + 1, 0.0);
    if (var_of[c.p] >= 0) row[var_of[c.p]] = 1.0;
    if (var_of[c.q] >= 0) row[var_of[c.q]] = -1.0;
    row[nf] = d;
    lp.add_row(std::move(row), Relation::LessEq, d);
  }

  auto sol = lp_solve(lp);
  if (sol.status != LpStatus::Optimal) throw Error("exposing_functional: margin LP failed");
  const double margin = sol.objective;
  cert.rho_gap = 1.0 - margin;
  cert.feasible = margin > opts_.feasibility_tol;

  std::vector<double> fvals(sol.x.begin(), sol.x.begin() + nf);
  if (opts_.canonical) {
    // Lexicographic-minimal f once the margin is fixed.
    LinearProgram fixed = lp;
    {
      std::vector<double> row(nf + 1, 0.0);
      row[nf] = 1.0;
      fixed.add_row(std::move(row), Relation::GreaterEq, margin - 1e-12 * m.scale());
    }
    for (int v = 0; v < nf; ++v) {
      for (auto& c : fixed.objective) c = 0.0;
      fixed.objective[v] = 1.0;
      fixed.sense = Sense::Minimize;
      auto step = lp_solve(fixed);
      if (step.status != LpStatus::Optimal)
        throw Error("exposing_functional: canonicalization LP failed");
      fvals[v] = step.x[v];
      std::vector<double> row(nf + 1, 0.0);
      row[v] = 1.0;
      fixed.add_row(std::move(row), Relation::Equal, fvals[v]);
    }
  }
  cert.f.assign(m.size(), 0.0);
  for (int i = 0; i < m.size(); ++i)
    if (var_of[i] >= 0) cert.f[i] = fvals[var_of[i]];

  if (!cert.feasible) cert.witness = convex_decompose(mol.vector());
  return cert;
}

const ExposureCertificate& ExposureAnalysis::exposing(int p, int q) {
  auto key = std::make_pair(p, q);
  auto it = exposing_.find(key);
  if (it == exposing_.end())
    it = exposing_.emplace(key, solve_exposing(Molecule{space_, p, q})).first;
  return it->second;
}

SliceDiameterResult ExposureAnalysis::slice_diameter(const std::vector<double>& f, double delta,
                                                     SliceMethod method) {
  const auto& m = *space_;
  if (static_cast<int>(f.size()) != m.size()) throw Error("slice_diameter: functional size mismatch");
  std::vector<double> fn = f;
  const double fb = fn[m.base()];
  for (auto& v : fn) v -= fb;
  if (scalar_lip_norm(m, fn) > 1.0 + 1e-9) throw Error("slice_diameter: functional norm exceeds 1");
  if (!(delta > 0.0)) throw Error("slice_diameter: delta must be positive");

  SliceDiameterResult res;
  res.functional = fn;
  res.delta = delta;
  res.method = method;
  const double level = 1.0 - delta;
  const double slack = 1e-12 * m.scale();

  std::vector<FreeVector> pts;
  if (method == SliceMethod::MoleculeRestricted) {
    for (const auto& mol : molecule_set(space_))
      if (pair_with(fn, mol) >= level - slack) pts.push_back(mol.vector());
  } else {
    const auto& verts = vertices();
    std::vector<double> val(verts.size());
    for (size_t i = 0; i < verts.size(); ++i) val[i] = pair_with(fn, verts[i]);
    for (size_t i = 0; i < verts.size(); ++i)
      if (val[i] >= level - slack) pts.push_back(verts[i].vector());
    for (const auto& [a, b] : edges()) {
      const bool ina = val[a] >= level - slack, inb = val[b] >= level - slack;
      if (ina == inb) continue;
      const int hi = ina ? a : b, lo = ina ? b : a;
      const double t = (level - val[lo]) / (val[hi] - val[lo]);
      auto point = verts[lo].vector();
      auto dir = verts[hi].vector() - verts[lo].vector();
      point += t * std::move(dir);
      pts.push_back(std::move(point));
    }
  }

  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const double d = free_norm_value(pts[i] - pts[j]);
      if (d > res.diameter) {
        res.diameter = d;
        res.attaining = std::make_pair(pts[i], pts[j]);
      }
    }
  return res;
}

double ExposureAnalysis::max_slice_diameter(double delta) {
  auto it = max_diam_.find(delta);
  if (it != max_diam_.end()) return it->second;
  double mx = 0.0;
  for (const auto& mol : molecule_set(space_)) {
    const auto& cert = exposing(mol.p, mol.q);
    mx = std::max(mx,
                  slice_diameter(cert.f, delta, SliceMethod::ExactPolytope).diameter);
  }
  max_diam_[delta] = mx;
  return mx;
}

ExposureProfile ExposureAnalysis::profile(const std::vector<double>& eps_grid) {
  if (analyze(*space_).gromov_constant <= 0.0)
    throw Error("uniform_exposure_profile: space is not Gromov concave");
  ExposureProfile prof;
  prof.eps = eps_grid;
  for (double eps : eps_grid) {
    // Largest dyadic delta in {2^-1 .. 2^-20} with max diameter < eps.
    double chosen = 0.0;
    int lo = 1, hi = 20;
    // Dyadic bisection using monotonicity of the diameter in delta.
    while (lo <= hi) {
      const int mid = (lo + hi) / 2;  // larger exponent = smaller delta
      const double delta = std::ldexp(1.0, -mid);
      if (max_slice_diameter(delta) < eps) {
        chosen = delta;
        hi = mid - 1;
      } else {
        lo = mid + 1;
      }
    }
    prof.delta.push_back(chosen);
  }
  return prof;
}

double ExposureAnalysis::delta_for(double eps) { return profile({eps}).delta.front(); }

ExposureCertificate exposing_functional(const Molecule& m, ExposeOptions opts) {
  ExposureAnalysis an(m.space, opts);
  return an.exposing(m.p, m.q);
}

SeparationReport rho_separation(const SpacePtr& space, ExposeOptions opts) {
  ExposureAnalysis an(space, opts);
  SeparationReport rep;
  bool any_competitor = false;
  double mx = 0.0;
  for (const auto& mol : molecule_set(space)) {
    const auto& cert = an.exposing(mol.p, mol.q);
    rep.per_molecule.push_back({mol.p, mol.q, cert.feasible, cert.rho_gap});
    if (!cert.feasible) rep.non_vertices.push_back(mol);
    if (cert.rho_gap != kNegInf) {
      any_competitor = true;
      mx = std::max(mx, cert.rho_gap);
    }
  }
  rep.max_rho = any_competitor ? mx : 0.0;
  return rep;
}

SliceDiameterResult slice_diameter(const SpacePtr& space, const std::vector<double>& f,
                                   double delta, SliceMethod method) {
  ExposureAnalysis an(space);
  return an.slice_diameter(f, delta, method);
}

ExposureProfile uniform_exposure_profile(const SpacePtr& space,
                                         const std::vector<double>& eps_grid,
                                         ExposeOptions opts) {
  ExposureAnalysis an(space, opts);
  return an.profile(eps_grid);
}

AlphaWitness alpha_witness(const SpacePtr& space, ExposeOptions opts) {
  ExposureAnalysis an(space, opts);
  AlphaWitness w;
  w.gamma = an.vertices();
  for (const auto& v : w.gamma) {
    const auto& cert = an.exposing(v.p, v.q);
    if (!cert.feasible) throw Error("alpha_witness: vertex without exposing functional");
    w.functionals.push_back(cert.f);
  }
  // Condition (ii): cross actions within gamma, excluding +-self.
  for (size_t a = 0; a < w.gamma.size(); ++a)
    for (size_t b = 0; b < w.gamma.size(); ++b) {
      if (same_unordered_pair(w.gamma[a], w.gamma[b])) continue;
      w.rho = std::max(w.rho, std::abs(pair_with(w.functionals[a], w.gamma[b])));
    }
  // Condition (iii) and the decomposition constant of the finite argument.
  w.delta_min = kInf;
  for (const auto& mol : molecule_set(space)) {
    auto atoms = convex_decompose(mol.vector());
    for (const auto& atom : atoms)
      if (atom.weight > 0.0) w.delta_min = std::min(w.delta_min, atom.weight);
  }
  return w;
}

}  // namespace freelip
