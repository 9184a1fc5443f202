#include "freelip/bpb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "freelip/linear_program.hpp"

namespace freelip {

namespace {

constexpr double kAttainBand = 1e-9;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> sub(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (a.get() != b.get()) throw Error(std::string(what) + ": mismatched space reference");
}

double map_distance(const LipschitzMap& a, const LipschitzMap& b) {
  require_same_space(a.space, b.space, "map_distance");
  double best = 0.0;
  for (const auto& m : molecule_set_unordered(a.space))
    best = std::max(best, norm_eval(a.target, sub(a.hat(m), b.hat(m))));
  return best;
}

LipschitzMap rescaled(const LipschitzMap& f, double factor) {
  LipschitzMap g = f;
  for (auto& img : g.images)
    for (auto& c : img) c *= factor;
  return g;
}

// Normalizes to Lipschitz norm one; returns the recorded input scale.
std::pair<LipschitzMap, double> normalized(const LipschitzMap& f) {
  const double n = lip_norm(f).lip_norm;
  if (n <= 0.0) throw Error("map has Lipschitz norm zero; query rejected");
  if (std::abs(n - 1.0) <= 1e-12) return {f, n};
  return {rescaled(f, 1.0 / n), n};
}

double metric_quotient_of(const Molecule& m, const Molecule& u) {
  const auto& sp = *m.space;
  return (sp.dist(m.p, u.p) + sp.dist(m.q, u.q)) / sp.dist(m.p, m.q);
}

}  // namespace

LipschitzMap::LipschitzMap(SpacePtr s, NormSpec t, std::vector<std::vector<double>> imgs)
    : space(std::move(s)), target(std::move(t)), images(std::move(imgs)) {
  if (!space) throw Error("LipschitzMap: null space");
  if (static_cast<int>(images.size()) != space->size())
    throw Error("LipschitzMap: one image per point required");
  for (const auto& img : images)
    if (static_cast<int>(img.size()) != target.dim)
      throw Error("LipschitzMap: image dimension does not match the target");
  for (double c : images[space->base()])
    if (c != 0.0) throw Error("LipschitzMap: image of the base point must be zero");
}

std::vector<double> LipschitzMap::hat(const FreeVector& x) const {
  require_same_space(space, x.space, "LipschitzMap::hat");
  std::vector<double> out(target.dim, 0.0);
  for (int p = 0; p < space->size(); ++p) {
    const double c = x.coeff[p];
    if (c == 0.0) continue;
    for (int k = 0; k < target.dim; ++k) out[k] += c * images[p][k];
  }
  return out;
}

std::vector<double> LipschitzMap::hat(const Molecule& m) const {
  require_same_space(space, m.space, "LipschitzMap::hat");
  const double inv = 1.0 / space->dist(m.p, m.q);
  std::vector<double> out(target.dim, 0.0);
  for (int k = 0; k < target.dim; ++k) out[k] = (images[m.p][k] - images[m.q][k]) * inv;
  return out;
}

LipschitzMap scalar_map(const SpacePtr& space, const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != space->size()) throw Error("scalar_map: size mismatch");
  std::vector<std::vector<double>> imgs(space->size());
  const double fb = f[space->base()];
  for (int i = 0; i < space->size(); ++i) imgs[i] = {f[i] - fb};
  return LipschitzMap(space, NormSpec::scalar(), std::move(imgs));
}

AttainmentReport lip_norm(const LipschitzMap& f) {
  AttainmentReport rep;
  auto molecules = molecule_set(f.space);
  rep.values.reserve(molecules.size());
  for (const auto& m : molecules) {
    const double v = norm_eval(f.target, f.hat(m));
    rep.values.push_back(v);
    rep.lip_norm = std::max(rep.lip_norm, v);
  }
  for (size_t i = 0; i < molecules.size(); ++i)
    if (rep.values[i] >= rep.lip_norm - kAttainBand) rep.attaining.push_back(molecules[i]);
  return rep;
}

std::vector<double> linearize_apply(const LipschitzMap& f, const FreeVector& x) {
  return f.hat(x);
}

namespace {

// Shared data of the attaining-approximation LPs for one query map.
struct ApproxContext {
  const LipschitzMap& f;
  std::vector<Molecule> pairs;               // unordered molecules
  std::vector<std::vector<double>> facets;   // of the target ball
  std::vector<std::vector<double>> fhat;     // F_hat per pair
  std::vector<int> var_of;                   // point -> first var index, -1 at base
  int nvars = 0;                             // (n-1) * d

  explicit ApproxContext(const LipschitzMap& f_in) : f(f_in) {
    pairs = molecule_set_unordered(f.space);
    facets = ball_description(f.target).facets;
    fhat.reserve(pairs.size());
    for (const auto& m : pairs) fhat.push_back(f.hat(m));
    var_of.assign(f.space->size(), -1);
    for (int p = 0; p < f.space->size(); ++p)
      if (p != f.space->base()) {
        var_of[p] = nvars;
        nvars += f.target.dim;
      }
  }

  // Row of z_j(G_hat(molecule)) over the image variables.
  void molecule_row(const Molecule& m, const std::vector<double>& z,
                    std::vector<double>& row) const {
    const double inv = 1.0 / f.space->dist(m.p, m.q);
    if (var_of[m.p] >= 0)
      for (int c = 0; c < f.target.dim; ++c) row[var_of[m.p] + c] += inv * z[c];
    if (var_of[m.q] >= 0)
      for (int c = 0; c < f.target.dim; ++c) row[var_of[m.q] + c] -= inv * z[c];
  }

  LipschitzMap map_from(const std::vector<double>& v) const {
    std::vector<std::vector<double>> imgs(f.space->size(),
                                          std::vector<double>(f.target.dim, 0.0));
    for (int p = 0; p < f.space->size(); ++p)
      if (var_of[p] >= 0)
        for (int c = 0; c < f.target.dim; ++c) imgs[p][c] = v[var_of[p] + c];
    return LipschitzMap(f.space, f.target, std::move(imgs));
  }
};

struct FacetSolve {
  bool ok = false;
  std::vector<double> v;  // image variables
  double objective = 0.0;
  double dual_bound = 0.0;
  BoundCertificate cert;
};

// Direct form: minimize t over images and t.
FacetSolve solve_facet_primal(const ApproxContext& ctx, const Molecule& u,
                              const std::vector<double>& zstar) {
  const int nv = ctx.nvars;
  LinearProgram lp(nv + 1, Sense::Minimize);
  lp.objective[nv] = 1.0;
  {
    std::vector<double> row(nv + 1, 0.0);
    ctx.molecule_row(u, zstar, row);
    lp.add_row(std::move(row), Relation::Equal, 1.0);
  }
  for (size_t i = 0; i < ctx.pairs.size(); ++i)
    for (const auto& z : ctx.facets) {
      std::vector<double> lip_row(nv + 1, 0.0);
      ctx.molecule_row(ctx.pairs[i], z, lip_row);
      std::vector<double> dev_row(nv + 1, 0.0);
      for (int c = 0; c < nv; ++c) dev_row[c] = -lip_row[c];
      dev_row[nv] = -1.0;
      lp.add_row(std::move(lip_row), Relation::LessEq, 1.0);
      lp.add_row(std::move(dev_row), Relation::LessEq, -dot(z, ctx.fhat[i]));
    }
  auto sol = lp_solve(lp);
  FacetSolve fs;
  if (sol.status != LpStatus::Optimal) return fs;
  fs.ok = true;
  fs.v.assign(sol.x.begin(), sol.x.begin() + nv);
  fs.objective = sol.objective;
  fs.dual_bound = sol.dual_objective - sol.gap - 1e-8 * (1.0 + std::abs(sol.dual_objective));
  return fs;
}

// Explicitly dualized form; preferable when the row grid is much larger than
// the number of image variables. The optimal images are read off the duals of
// the stationarity rows.
FacetSolve solve_facet_dual(const ApproxContext& ctx, const Molecule& u,
                            const std::vector<double>& zstar) {
  const int nv = ctx.nvars;
  const int nr = static_cast<int>(ctx.pairs.size() * ctx.facets.size());
  // Variables: alpha_r >= 0, beta_r >= 0, mu free.
  LinearProgram lp(2 * nr + 1, Sense::Maximize);
  for (int r = 0; r < 2 * nr; ++r) lp.lower[r] = 0.0;
  std::vector<std::vector<double>> arow(nr, std::vector<double>(nv, 0.0));
  std::vector<double> e(nr, 0.0);
  {
    int r = 0;
    for (size_t i = 0; i < ctx.pairs.size(); ++i)
      for (const auto& z : ctx.facets) {
        ctx.molecule_row(ctx.pairs[i], z, arow[r]);
        e[r] = dot(z, ctx.fhat[i]);
        ++r;
      }
  }
  std::vector<double> eq(nv, 0.0);
  {
    std::vector<double> tmp(nv + 1, 0.0);
    ctx.molecule_row(u, zstar, tmp);
    std::copy(tmp.begin(), tmp.begin() + nv, eq.begin());
  }
  // Stationarity per image variable: A'alpha - A'beta + mu a_eq = 0.
  for (int c = 0; c < nv; ++c) {
    std::vector<double> row(2 * nr + 1, 0.0);
    for (int r = 0; r < nr; ++r) {
      row[r] = arow[r][c];
      row[nr + r] = -arow[r][c];
    }
    row[2 * nr] = eq[c];
    lp.add_row(std::move(row), Relation::Equal, 0.0);
  }
  {
    std::vector<double> row(2 * nr + 1, 0.0);
    for (int r = 0; r < nr; ++r) row[nr + r] = 1.0;
    lp.add_row(std::move(row), Relation::Equal, 1.0);
  }
  for (int r = 0; r < nr; ++r) {
    lp.objective[r] = -1.0;
    lp.objective[nr + r] = e[r];
  }
  lp.objective[2 * nr] = -1.0;

  auto sol = lp_solve(lp);
  FacetSolve fs;
  if (sol.status != LpStatus::Optimal) return fs;
  fs.ok = true;
  // Minimization duals of the stationarity rows carry the primal images.
  fs.v.assign(nv, 0.0);
  for (int c = 0; c < nv; ++c) fs.v[c] = -sol.dual[c];
  double att = dot(eq, fs.v);
  if (std::abs(att + 1.0) < std::abs(att - 1.0))
    for (auto& c : fs.v) c = -c;
  att = dot(eq, fs.v);
  if (std::abs(att - 1.0) > 1e-6)
    throw Error("best_attaining_approx: dual extraction failed the attainment check");
  fs.objective = sol.objective;
  fs.dual_bound = sol.objective - sol.gap - 1e-8 * (1.0 + std::abs(sol.objective));
  return fs;
}

}  // namespace

ApproxResult best_attaining_approx(const LipschitzMap& f, const Molecule& u) {
  require_same_space(f.space, u.space, "best_attaining_approx");
  if (!f.target.is_polyhedral())
    throw Error("best_attaining_approx: unsupported non-polyhedral target " + f.target.describe());
  const double fn = lip_norm(f).lip_norm;
  if (std::abs(fn - 1.0) > 1e-7)
    throw Error("best_attaining_approx: query map must have Lipschitz norm one");

  ApproxContext ctx(f);
  const bool use_dual = ctx.pairs.size() * ctx.facets.size() > 200;

  ApproxResult best;
  bool have = false;
  for (const auto& zstar : ctx.facets) {
    FacetSolve fs = use_dual ? solve_facet_dual(ctx, u, zstar)
                             : solve_facet_primal(ctx, u, zstar);
    if (!fs.ok) continue;
    auto g = ctx.map_from(fs.v);
    // Authoritative values recomputed from the candidate map.
    double dev = 0.0;
    for (const auto& m : ctx.pairs) dev = std::max(dev, norm_eval(f.target, sub(f.hat(m), g.hat(m))));
    const double gnorm = lip_norm(g).lip_norm;
    const double att = dot(zstar, g.hat(u));
    if (gnorm > 1.0 + 1e-7 || std::abs(att - 1.0) > 1e-7 || std::abs(dev - fs.objective) > 1e-6)
      throw Error("best_attaining_approx: solution failed re-verification");
    if (!have || dev < best.dist) {
      have = true;
      best.dist = dev;
      best.dual_bound = fs.dual_bound;
      best.g = std::move(g);
      best.facet = zstar;
    }
  }
  if (!have) throw Error("best_attaining_approx: every facet subproblem failed");
  // The lower bound certifies the min over facets.
  double min_bound = best.dual_bound;
  best.dual_bound = std::min(min_bound, best.dist);
  return best;
}

namespace {

BpbSolution make_solution(const LipschitzMap& g, const Molecule& m, const Molecule& u,
                          const LipschitzMap& f_query, double input_scale) {
  BpbSolution sol;
  sol.g = g;
  sol.u = u;
  sol.dist_map = map_distance(f_query, g);
  sol.proximity = free_norm(m.vector() - u.vector());
  sol.dist_molecule = sol.proximity.value;
  sol.metric_quotient = metric_quotient_of(m, u);
  sol.attainment = lip_norm(g);
  sol.input_scale = input_scale;
  return sol;
}

}  // namespace

std::optional<std::string> check_bpb_solution(const BpbSolution& sol, const LipschitzMap& f,
                                              const Molecule& m) {
  auto rep = lip_norm(sol.g);
  if (std::abs(rep.lip_norm - 1.0) > 1e-8) return "||G|| != 1";
  const double at_u = norm_eval(sol.g.target, sol.g.hat(sol.u));
  if (std::abs(at_u - 1.0) > 1e-8) return "||G_hat(u)|| != 1";
  auto [fn, scale] = normalized(f);
  if (std::abs(map_distance(fn, sol.g) - sol.dist_map) > 1e-9) return "dist_map mismatch";
  if (std::abs(free_norm_value(m.vector() - sol.u.vector()) - sol.dist_molecule) > 1e-9)
    return "dist_molecule mismatch";
  if (!(sol.metric_quotient >= 0.0)) return "metric quotient negative";
  if (!sol.proximity.verify(*f.space, (m.vector() - sol.u.vector()).coeff)) return "proximity certificate invalid";
  return std::nullopt;
}

LipBpbResult lip_bpb_solve(const LipschitzMap& f_in, const Molecule& m, double eps) {
  require_same_space(f_in.space, m.space, "lip_bpb_solve");
  if (!(eps > 0.0)) throw Error("lip_bpb_solve: eps must be positive");
  auto [f, input_scale] = normalized(f_in);

  LipBpbResult res;
  // Trivial case: the query already attains at m.
  auto rep = lip_norm(f);
  const double at_m = norm_eval(f.target, f.hat(m));
  if (at_m >= rep.lip_norm - 1e-12) {
    res.solved = true;
    res.solution = make_solution(f, m, m, f, input_scale);
    res.certified_min = 0.0;
    return res;
  }

  auto molecules = molecule_set(f.space);
  std::vector<std::pair<double, int>> by_dist;
  std::vector<char> quotient_member(molecules.size(), 0);
  for (size_t i = 0; i < molecules.size(); ++i) {
    const double d = molecule_distance(molecules[i], m);
    const double q = metric_quotient_of(m, molecules[i]);
    if (q < eps) quotient_member[i] = 1;
    if (d < eps) by_dist.emplace_back(d, static_cast<int>(i));
    else if (q < eps) res.criteria_disagree = true;
  }
  std::sort(by_dist.begin(), by_dist.end());
  for (const auto& [d, i] : by_dist)
    if (!quotient_member[i]) res.criteria_disagree = true;

  double best_dist = kInf;
  int best_index = -1;
  LipschitzMap best_g;
  res.certified_min = kInf;
  for (const auto& [d, i] : by_dist) {
    auto approx = best_attaining_approx(f, molecules[i]);
    res.candidates.push_back({molecules[i], d, approx.dist, approx.dual_bound});
    res.certified_min = std::min(res.certified_min, approx.dual_bound);
    if (approx.dist < best_dist - 1e-15) {
      best_dist = approx.dist;
      best_index = static_cast<int>(res.candidates.size()) - 1;
      best_g = std::move(approx.g);
    }
  }
  if (best_index >= 0 && best_dist < eps) {
    res.solved = true;
    res.solution =
        make_solution(best_g, m, res.candidates[best_index].u, f, input_scale);
  }
  return res;
}

GromovSolution gromov_perturbation(const LipschitzMap& f, const Molecule& m, double eps) {
  ExposureAnalysis an(f.space);
  return gromov_perturbation(an, f, m, eps);
}

GromovSolution gromov_perturbation(ExposureAnalysis& analysis, const LipschitzMap& f_in,
                                   const Molecule& m, double eps) {
  require_same_space(f_in.space, m.space, "gromov_perturbation");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("gromov_perturbation: eps must lie in (0,1)");
  auto [f, input_scale] = normalized(f_in);

  GromovSolution out;
  out.delta = analysis.delta_for(eps);
  if (out.delta <= 0.0)
    throw HypothesisError("gromov_perturbation: no usable slice parameter for this eps");
  // (1 + eps/4)(1 - eta) > 1 + eps(1 - delta)/4, taken at half the margin.
  out.eta = 0.5 * (eps * out.delta / 4.0) / (1.0 + eps / 4.0);

  const double at_m = norm_eval(f.target, f.hat(m));
  if (!(at_m > 1.0 - out.eta)) {
    std::ostringstream os;
    os << "gromov_perturbation: hypothesis not met, ||F_hat(m)|| = " << at_m
       << " requires > 1 - eta with eta = " << out.eta;
    throw HypothesisError(os.str());
  }

  const auto& cert = analysis.exposing(m.p, m.q);
  if (!cert.feasible)
    throw HypothesisError("gromov_perturbation: molecule is not strongly exposed");
  const auto& fm = cert.f;

  // G0 = F + (eps/4) f_m(.) F_hat(m), then normalize.
  const auto fm_at = f.hat(m);
  std::vector<std::vector<double>> imgs = f.images;
  for (int p = 0; p < f.space->size(); ++p)
    for (int c = 0; c < f.target.dim; ++c) imgs[p][c] += (eps / 4.0) * fm[p] * fm_at[c];
  LipschitzMap g0(f.space, f.target, std::move(imgs));
  auto rep0 = lip_norm(g0);
  LipschitzMap g = rescaled(g0, 1.0 / rep0.lip_norm);

  // Attaining molecule of G; prefer m itself when it attains.
  auto repg = lip_norm(g);
  Molecule u = m;
  if (norm_eval(g.target, g.hat(m)) < repg.lip_norm - 1e-12) {
    auto molecules = molecule_set(g.space);
    double best = -kInf;
    for (size_t i = 0; i < molecules.size(); ++i)
      if (repg.values[i] > best + 1e-15) {
        best = repg.values[i];
        u = molecules[i];
      }
  }

  const double level = 1.0 - out.delta;
  const double v_plus = pair_with(fm, u);
  const double v_minus = pair_with(fm, u.swapped());
  Molecule u_final = u;
  if (v_plus >= level - 1e-9) {
    out.slice_value = v_plus;
  } else if (v_minus >= level - 1e-9) {
    u_final = u.swapped();
    out.sign_flipped = true;
    out.slice_value = v_minus;
  } else {
    throw Error("gromov_perturbation: attaining molecule escaped the slice");
  }

  out.sol = make_solution(g, m, u_final, f, input_scale);
  out.intermediate_dist = out.sol.dist_map;
  return out;
}

ScalarSolver default_scalar_solver(const SpacePtr& space) {
  return [space](const std::vector<double>& f, const Molecule& m,
                 double gamma) -> std::optional<std::pair<std::vector<double>, Molecule>> {
    auto fmap = scalar_map(space, f);
    auto res = lip_bpb_solve(fmap, m, gamma);
    if (!res.solved) return std::nullopt;
    const auto& sol = *res.solution;
    std::vector<double> g(space->size(), 0.0);
    for (int i = 0; i < space->size(); ++i) g[i] = sol.g.images[i][0];
    Molecule u = sol.u;
    if (pair_with(g, u) < 0.0) return std::nullopt;  // wrong orientation
    return std::make_pair(std::move(g), u);
  };
}

BetaSolution beta_transfer(const LipschitzMap& f_in, const Molecule& m, double eps,
                           const BetaWitness& w, const ScalarSolver& solver) {
  require_same_space(f_in.space, m.space, "beta_transfer");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("beta_transfer: eps must lie in (0,1)");
  {
    Rng check_rng(0xBE7A);
    validate_beta_witness(f_in.target, w, check_rng);
  }
  auto [f, input_scale] = normalized(f_in);

  BetaSolution out;
  // gamma: halve the largest dyadic grid value with
  // 1 + rho(eps/2 + gamma) < (1 + eps/2)(1 - gamma).
  double gamma = 0.0;
  for (int i = 2; i <= 60; ++i) {
    const double cand = eps / std::ldexp(1.0, i);
    if (1.0 + w.rho * (eps / 2.0 + cand) < (1.0 + eps / 2.0) * (1.0 - cand)) {
      gamma = cand / 2.0;
      break;
    }
  }
  if (gamma <= 0.0) throw HypothesisError("beta_transfer: no admissible gamma for this witness");
  out.gamma = gamma;

  // Pick the witness functional that sees F_hat(m) best.
  const auto fm_val = f.hat(m);
  int lambda = -1;
  double best = -1.0;
  for (size_t i = 0; i < w.pairs.size(); ++i) {
    const double v = std::abs(dot(w.pairs[i].functional, fm_val));
    if (v > best + 1e-15) {
      best = v;
      lambda = static_cast<int>(i);
    }
  }
  out.lambda = lambda;
  const auto& ystar = w.pairs[lambda].functional;
  const auto& ypoint = w.pairs[lambda].point;
  const double sigma = dot(ystar, fm_val) >= 0.0 ? 1.0 : -1.0;

  // Scalar functional F*(y*_lambda) and its normalization.
  std::vector<double> fy(f.space->size(), 0.0);
  for (int p = 0; p < f.space->size(); ++p) fy[p] = dot(ystar, f.images[p]);
  const double s = scalar_lip_norm(*f.space, fy);
  out.scalar_norm = s;
  if (!(s > 1.0 - gamma))
    throw HypothesisError("beta_transfer: ||F*(y*_lambda)|| too small for this gamma");
  std::vector<double> h(fy.size());
  for (size_t i = 0; i < fy.size(); ++i) h[i] = fy[i] / s;

  const Molecule m_query = sigma > 0.0 ? m : m.swapped();
  auto scalar_res = solver(h, m_query, gamma);
  if (!scalar_res)
    throw Error("beta_transfer: scalar solver failure at gamma = " + std::to_string(gamma));
  const auto& [g0_scalar, u_scalar] = *scalar_res;
  std::vector<double> ghat(g0_scalar.size());
  for (size_t i = 0; i < ghat.size(); ++i) ghat[i] = s * g0_scalar[i];
  out.scalar_g = ghat;

  // G0 = F + [(1 + eps/2) g - F*(y*_lambda)] y_lambda.
  std::vector<std::vector<double>> imgs = f.images;
  for (int p = 0; p < f.space->size(); ++p) {
    const double coef = (1.0 + eps / 2.0) * ghat[p] - fy[p];
    for (int c = 0; c < f.target.dim; ++c) imgs[p][c] += coef * ypoint[c];
  }
  LipschitzMap g0(f.space, f.target, std::move(imgs));

  // Construction identities.
  for (int p = 0; p < f.space->size(); ++p) {
    const double lhs = dot(ystar, g0.images[p]);
    const double rhs = (1.0 + eps / 2.0) * ghat[p];
    out.identity_residual = std::max(out.identity_residual, std::abs(lhs - rhs));
  }
  if (out.identity_residual > 1e-9)
    throw Error("beta_transfer: G0*(y*_lambda) identity failed");
  for (const auto& pr : w.pairs) {
    std::vector<double> comp(f.space->size(), 0.0);
    for (int p = 0; p < f.space->size(); ++p) comp[p] = dot(pr.functional, g0.images[p]);
    out.dual_norms.push_back(scalar_lip_norm(*f.space, comp));
  }
  const double lhs = out.dual_norms[lambda];
  for (size_t i = 0; i < out.dual_norms.size(); ++i)
    if (static_cast<int>(i) != lambda && out.dual_norms[i] >= lhs - 1e-12)
      throw Error("beta_transfer: dual norm not maximized at lambda");

  out.raw_dist = map_distance(f, g0);
  if (out.raw_dist > eps / 2.0 + gamma + 1e-8)
    throw Error("beta_transfer: construction distance exceeded eps/2 + gamma");

  auto rep0 = lip_norm(g0);
  out.g0_norm = rep0.lip_norm;
  LipschitzMap g = rescaled(g0, 1.0 / rep0.lip_norm);

  Molecule u = pair_with(ghat, u_scalar) >= 0.0 ? u_scalar : u_scalar.swapped();
  Molecule u_report = sigma > 0.0 ? u : u.swapped();
  out.sol = make_solution(g, m, u_report, f, input_scale);
  return out;
}

QuasiBetaSolution quasi_beta_transfer(const LipschitzMap& f_in, double eps,
                                      const QuasiBetaWitness& w) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("quasi_beta_transfer: eps must lie in (0,1)");
  validate_quasi_beta(f_in.target, w);
  auto [f, input_scale] = normalized(f_in);
  (void)input_scale;

  // Extreme dual point where F* attains (finite enumeration).
  auto dual_extremes = ball_description(f.target).facets;
  int best_e = -1;
  double best_norm = -1.0;
  for (size_t i = 0; i < dual_extremes.size(); ++i) {
    std::vector<double> comp(f.space->size(), 0.0);
    for (int p = 0; p < f.space->size(); ++p) comp[p] = dot(dual_extremes[i], f.images[p]);
    const double nv = scalar_lip_norm(*f.space, comp);
    if (nv > best_norm + 1e-15) {
      best_norm = nv;
      best_e = static_cast<int>(i);
    }
  }
  const auto& estar = dual_extremes[best_e];

  const QuasiBetaCover* cover = nullptr;
  for (const auto& cov : w.covers) {
    bool same = cov.extreme.size() == estar.size();
    for (size_t c = 0; same && c < estar.size(); ++c)
      if (std::abs(cov.extreme[c] - estar[c]) > 1e-9) same = false;
    if (same) {
      cover = &cov;
      break;
    }
  }
  if (!cover) throw Error("quasi_beta_transfer: attaining extreme point has no witness cover");

  QuasiBetaSolution out;
  for (int idx : cover->indices) out.r = std::max(out.r, w.rho[idx]);
  double gamma = 0.0;
  for (int i = 2; i <= 60; ++i) {
    const double cand = eps / std::ldexp(1.0, i);
    if (1.0 + out.r * (eps / 2.0 + cand) < (1.0 + eps / 2.0) * (1.0 - cand)) {
      gamma = cand / 2.0;
      break;
    }
  }
  if (gamma <= 0.0) throw HypothesisError("quasi_beta_transfer: no admissible gamma");
  out.gamma = gamma;

  // y*_1 in the cover with ||F*(y*_1)|| > 1 - gamma.
  int chosen = -1;
  double chosen_norm = -1.0;
  std::vector<double> fy;
  for (int idx : cover->indices) {
    std::vector<double> comp(f.space->size(), 0.0);
    for (int p = 0; p < f.space->size(); ++p) comp[p] = dot(w.functionals[idx], f.images[p]);
    const double nv = scalar_lip_norm(*f.space, comp);
    if (nv > chosen_norm + 1e-15) {
      chosen_norm = nv;
      chosen = idx;
      fy = std::move(comp);
    }
  }
  if (chosen < 0 || !(chosen_norm > 1.0 - gamma))
    throw Error("quasi_beta_transfer: no qualifying y*_1 in the cover");
  out.chosen_index = chosen;

  // Finite M: the scalar functional strongly attains as it is; g = F*(y*_1).
  Molecule u{f.space, -1, -1};
  double best_val = -kInf;
  for (const auto& mol : molecule_set(f.space)) {
    const double v = pair_with(fy, mol);
    if (v > best_val + 1e-15) {
      best_val = v;
      u = mol;
    }
  }

  const auto& y1 = w.sigma[chosen];
  std::vector<std::vector<double>> imgs = f.images;
  for (int p = 0; p < f.space->size(); ++p) {
    const double coef = (eps / 2.0) * fy[p];  // (1+eps/2) g - F*(y*_1) with g = F*(y*_1)
    for (int c = 0; c < f.target.dim; ++c) imgs[p][c] += coef * y1[c];
  }
  LipschitzMap g0(f.space, f.target, std::move(imgs));

  // Proof display: ||G0*(y*_1)|| = (1+eps/2)||g|| > (1+eps/2)(1-gamma) > 1 + r(eps/2+gamma).
  {
    std::vector<double> comp(f.space->size(), 0.0);
    for (int p = 0; p < f.space->size(); ++p) comp[p] = dot(w.functionals[chosen], g0.images[p]);
    out.display_lhs = scalar_lip_norm(*f.space, comp);
    const double expected = (1.0 + eps / 2.0) * chosen_norm;
    if (std::abs(out.display_lhs - expected) > 1e-9)
      throw Error("quasi_beta_transfer: G0*(y*_1) display failed");
    if (!(out.display_lhs > (1.0 + eps / 2.0) * (1.0 - gamma)) ||
        !((1.0 + eps / 2.0) * (1.0 - gamma) > 1.0 + out.r * (eps / 2.0 + gamma)))
      throw Error("quasi_beta_transfer: proof inequalities failed");
  }

  auto rep0 = lip_norm(g0);
  out.g0_norm = rep0.lip_norm;
  if (std::abs(rep0.lip_norm - out.display_lhs) > 1e-9)
    throw Error("quasi_beta_transfer: operator norm not attained through y*_1");
  LipschitzMap g = rescaled(g0, 1.0 / rep0.lip_norm);
  out.g = g;
  out.u = u;
  out.attainment = lip_norm(g);
  const double at_u = norm_eval(g.target, g.hat(u));
  if (std::abs(at_u - 1.0) > 1e-8)
    throw Error("quasi_beta_transfer: output does not attain at the scalar molecule");
  out.dist_map = map_distance(f, g);
  if (!(out.dist_map < eps)) throw Error("quasi_beta_transfer: output drifted beyond eps");
  return out;
}

ScalarProjection scalar_projection(const LipschitzMap& g_map, const Molecule& u,
                                   const std::vector<double>& f_ref,
                                   const std::vector<double>& y0) {
  require_same_space(g_map.space, u.space, "scalar_projection");
  auto rep = lip_norm(g_map);
  const double at_u = norm_eval(g_map.target, g_map.hat(u));
  if (std::abs(rep.lip_norm - 1.0) > 1e-7 || std::abs(at_u - 1.0) > 1e-7)
    throw Error("scalar_projection: G must attain its unit norm at u");

  ScalarProjection out;
  out.y_star = norming_functional(g_map.target, g_map.hat(u));
  out.g.assign(g_map.space->size(), 0.0);
  for (int p = 0; p < g_map.space->size(); ++p) out.g[p] = dot(out.y_star, g_map.images[p]);
  out.g_norm = scalar_lip_norm(*g_map.space, out.g);
  out.g_at_u = pair_with(out.g, u);
  out.y_star_y0 = dot(out.y_star, y0);

  std::vector<double> scaled_ref(f_ref.size()), diff(f_ref.size()), diff2(f_ref.size());
  for (size_t i = 0; i < f_ref.size(); ++i) {
    scaled_ref[i] = out.y_star_y0 * f_ref[i];
    diff[i] = out.g[i] - f_ref[i];
    diff2[i] = out.g[i] - scaled_ref[i];
  }
  out.dist_to_ref = scalar_lip_norm(*g_map.space, diff);
  out.dist_to_scaled_ref = scalar_lip_norm(*g_map.space, diff2);
  return out;
}

LipschitzMap quasibeta_family_map(const SpacePtr& line3, int k) {
  if (line3->size() != 3) throw Error("quasibeta_family_map: needs a three-point space");
  const double a = 1.0 - 1.0 / k;
  // F_hat(m01) = (-1, a), F_hat(m12) = (1, a) on the unit-step line.
  const double d01 = line3->dist(0, 1), d12 = line3->dist(1, 2);
  std::vector<std::vector<double>> imgs(3, std::vector<double>(2, 0.0));
  imgs[1] = {d01 * 1.0, -d01 * a};
  imgs[2] = {imgs[1][0] - d12 * 1.0, imgs[1][1] - d12 * a};
  return LipschitzMap(line3, NormSpec::yk(k), std::move(imgs));
}

LipschitzMap integer_line_map(const SpacePtr& line, int n) {
  std::vector<double> f(line->size(), 0.0);
  for (int i = 0; i < line->size(); ++i) {
    const int p = i + 1;
    f[i] = p <= 2 * n ? p - 1 : p - 2;
  }
  return scalar_map(line, f);
}

LipschitzMap parabola_map(const SpacePtr& parabola, int n) {
  std::vector<double> f(parabola->size(), 0.0);
  for (int i = 0; i < parabola->size(); ++i) {
    const int p = i + 1;
    f[i] = p <= 2 * n ? p - 1 : p - 2;
  }
  return scalar_map(parabola, f);
}

namespace {

bool is_unit_step_line3(const PointedMetricSpace& m) {
  if (m.size() != 3 || m.base() != 0) return false;
  const double tol = 1e-9 * m.scale();
  return std::abs(m.dist(0, 1) - m.dist(1, 2)) <= tol &&
         std::abs(m.dist(0, 2) - (m.dist(0, 1) + m.dist(1, 2))) <= tol;
}

bool is_integer_line(const PointedMetricSpace& m) {
  if (m.base() != 0) return false;
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j)
      if (m.dist(i, j) != static_cast<double>(std::abs(i - j))) return false;
  return m.size() >= 4;
}

}  // namespace

ModulusEstimate modulus_estimate(const SpacePtr& space, const NormSpec& target, double eps,
                                 int budget, std::uint64_t seed,
                                 const std::vector<LipschitzMap>& witness_maps) {
  if (!target.is_polyhedral())
    throw Error("modulus_estimate: unsupported non-polyhedral target");
  ModulusEstimate est;
  est.eps = eps;
  Rng rng(seed);

  std::vector<LipschitzMap> maps = witness_maps;
  // Named counterexample maps when the space/target pair matches.
  if (target.variant == NormSpec::Variant::Yk && is_unit_step_line3(*space))
    maps.push_back(quasibeta_family_map(space, target.k));
  if (target.variant == NormSpec::Variant::Linf && target.dim == 1 && is_integer_line(*space))
    for (int n = 1; 3 * n <= space->size(); ++n) maps.push_back(integer_line_map(space, n));

  const int n_random = std::max(2, budget / 12);
  for (int i = 0; i < n_random; ++i) {
    std::vector<std::vector<double>> imgs(space->size(), std::vector<double>(target.dim, 0.0));
    for (int p = 0; p < space->size(); ++p)
      if (p != space->base())
        for (int c = 0; c < target.dim; ++c) imgs[p][c] = rng.uniform(-1.0, 1.0);
    LipschitzMap f(space, target, std::move(imgs));
    maps.push_back(normalized(f).first);
  }

  struct Query {
    LipschitzMap f;
    Molecule m;
    double value;
    bool solved = false;
  };
  std::vector<Query> queries;
  for (const auto& raw : maps) {
    auto [f, sc] = normalized(raw);
    (void)sc;
    auto rep = lip_norm(f);
    auto molecules = molecule_set(space);
    // Near-attaining but not attaining molecules are the informative queries;
    // keep a couple of attaining ones as sanity checks.
    std::vector<std::pair<double, int>> near, attain;
    for (size_t i = 0; i < molecules.size(); ++i) {
      if (rep.values[i] < 1.0 - 0.6) continue;
      if (rep.values[i] < 1.0 - kAttainBand) near.emplace_back(-rep.values[i], static_cast<int>(i));
      else attain.emplace_back(-rep.values[i], static_cast<int>(i));
    }
    std::sort(near.begin(), near.end());
    std::sort(attain.begin(), attain.end());
    int taken = 0;
    for (const auto& [negv, i] : near) {
      if (taken >= 6) break;
      queries.push_back({f, molecules[i], -negv});
      ++taken;
    }
    taken = 0;
    for (const auto& [negv, i] : attain) {
      if (taken >= 2) break;
      queries.push_back({f, molecules[i], -negv});
      ++taken;
    }
  }

  int used = 0;
  for (auto& q : queries) {
    if (used >= budget) {
      est.budget_exhausted = true;
      break;
    }
    ++used;
    auto res = lip_bpb_solve(q.f, q.m, eps);
    q.solved = res.solved;
    ++est.samples;
    if (!res.solved) {
      est.failures.push_back({q.f, q.m, q.value, res.certified_min});
      const double candidate = 1.0 - q.value;
      if (!est.eta_upper || candidate < *est.eta_upper) est.eta_upper = candidate;
    }
  }

  // Largest level with every sampled query above it solved (non-vacuously).
  for (int i = 0; i <= 16; ++i) {
    const double level = 0.6 * std::pow(0.7, i);
    bool any = false, all = true;
    for (const auto& q : queries) {
      if (q.value > 1.0 - level) {
        any = true;
        if (!q.solved) all = false;
      }
    }
    if (any && all) {
      est.eta_lower = level;
      break;
    }
  }
  return est;
}

}  // namespace freelip
