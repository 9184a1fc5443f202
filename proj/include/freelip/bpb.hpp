#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "freelip/exposing.hpp"
#include "freelip/free_space.hpp"
#include "freelip/norms.hpp"

namespace freelip {

// Vector-valued Lipschitz map vanishing at the base point, carried by its
// point images; the linearization acts on free vectors coefficient-wise.
struct LipschitzMap {
  SpacePtr space;
  NormSpec target;
  std::vector<std::vector<double>> images;  // per point; images[base] == 0

  LipschitzMap() = default;
  LipschitzMap(SpacePtr s, NormSpec t, std::vector<std::vector<double>> imgs);

  std::vector<double> hat(const FreeVector& x) const;
  std::vector<double> hat(const Molecule& m) const;
};

LipschitzMap scalar_map(const SpacePtr& space, const std::vector<double>& f);

struct AttainmentReport {
  double lip_norm = 0.0;
  std::vector<double> values;       // per ordered molecule index
  std::vector<Molecule> attaining;  // values within 1e-9 of the norm
};

AttainmentReport lip_norm(const LipschitzMap& f);
std::vector<double> linearize_apply(const LipschitzMap& f, const FreeVector& x);

// Feasible multipliers of the dualized facet subproblem; their objective is a
// machine-checkable lower bound on the attaining-approximation distance.
struct BoundCertificate {
  std::vector<double> alpha, beta;  // per (pair-major, facet-minor) row
  double mu = 0.0;
  double objective = 0.0;
};

struct ApproxResult {
  double dist = 0.0;        // minimal max-molecule deviation, recomputed from G
  double dual_bound = 0.0;  // certified lower bound from the LP duals
  LipschitzMap g;
  std::vector<double> facet;  // attainment functional z* with z*(G(u)) = 1
  std::vector<BoundCertificate> facet_bounds;  // one per facet of the target ball
};

// Best norm-one approximant attaining at u, for scalar or polyhedral targets.
// One LP per facet functional; the returned map and every bound certificate
// are re-verified before returning.
ApproxResult best_attaining_approx(const LipschitzMap& f, const Molecule& u);

// Re-checks one facet bound certificate by plain arithmetic (no solver).
bool check_bound_certificate(const LipschitzMap& f, const Molecule& u,
                             const std::vector<double>& facet_functional,
                             const BoundCertificate& cert, double tol = 1e-6);

struct BpbSolution {
  LipschitzMap g;
  Molecule u;
  double dist_map = 0.0;
  double dist_molecule = 0.0;
  double metric_quotient = 0.0;  // (d(p,r)+d(q,s))/d(p,q)
  AttainmentReport attainment;   // of g
  NormCertificate proximity;     // certificate for ||m - u||
  double input_scale = 1.0;      // recorded normalization of the query map
};

// Re-checks every BpbSolution invariant from scratch; returns a reason on
// failure.
std::optional<std::string> check_bpb_solution(const BpbSolution& sol, const LipschitzMap& f,
                                              const Molecule& m);

struct CandidateCertificate {
  Molecule u;
  double molecule_distance = 0.0;
  double dist = 0.0;
  double dual_bound = 0.0;
};

struct LipBpbResult {
  bool solved = false;
  std::optional<BpbSolution> solution;
  std::vector<CandidateCertificate> candidates;  // every candidate examined
  double certified_min = 0.0;                    // min dual bound over candidates
  bool criteria_disagree = false;  // free-norm vs metric-quotient candidate sets differ
};

// Enumerates molecules u with ||u - m|| < eps and takes the best attaining
// approximant; certified failure when every candidate stays >= eps away.
LipBpbResult lip_bpb_solve(const LipschitzMap& f, const Molecule& m, double eps);

struct GromovSolution {
  BpbSolution sol;
  double eta = 0.0;
  double delta = 0.0;
  double intermediate_dist = 0.0;  // ||F - G||, bounded by eps/2
  bool sign_flipped = false;       // attainment found in the mirrored slice
  double slice_value = 0.0;        // f_m at the (possibly mirrored) attaining molecule
};

// The rank-one perturbation construction for uniformly Gromov concave spaces.
GromovSolution gromov_perturbation(const LipschitzMap& f, const Molecule& m, double eps);
GromovSolution gromov_perturbation(ExposureAnalysis& analysis, const LipschitzMap& f,
                                   const Molecule& m, double eps);

// Scalar Lip-BPB solver: norm-one f, molecule m, gamma; returns g (point
// values) and u with ||g||_L = g_hat(u) = 1, ||g - f|| < gamma, ||m - u|| < gamma.
using ScalarSolver = std::function<std::optional<std::pair<std::vector<double>, Molecule>>(
    const std::vector<double>&, const Molecule&, double)>;

ScalarSolver default_scalar_solver(const SpacePtr& space);

struct BetaSolution {
  BpbSolution sol;
  int lambda = -1;
  double gamma = 0.0;
  double raw_dist = 0.0;           // ||F - G0|| for the construction operator
  double identity_residual = 0.0;  // max over points of |y*_l(G0(p)) - (1+eps/2) g(p)|
  double g0_norm = 0.0;
  std::vector<double> dual_norms;  // ||G0*(y*_mu)||_L per witness pair
  std::vector<double> scalar_g;    // the scalar sub-solution (unscaled, norm s)
  double scalar_norm = 0.0;        // s = ||F*(y*_lambda)||_L
};

BetaSolution beta_transfer(const LipschitzMap& f, const Molecule& m, double eps,
                           const BetaWitness& w, const ScalarSolver& solver);

struct QuasiBetaSolution {
  LipschitzMap g;
  Molecule u;
  double dist_map = 0.0;
  int chosen_index = -1;  // index into the witness functional set
  double gamma = 0.0;
  double r = 0.0;  // sup rho over the matched cover
  double g0_norm = 0.0;
  double display_lhs = 0.0;  // ||G0*(y*_1)||
  AttainmentReport attainment;
};

// Density-only transfer: strongly attaining G with ||F - G|| < eps, no
// proximity to a prescribed molecule.
QuasiBetaSolution quasi_beta_transfer(const LipschitzMap& f, double eps,
                                      const QuasiBetaWitness& w);

struct ScalarProjection {
  std::vector<double> g;       // y* composed with G, per point
  std::vector<double> y_star;  // the norming functional used
  double y_star_y0 = 0.0;
  double g_norm = 0.0;
  double g_at_u = 0.0;
  double dist_to_ref = 0.0;          // ||g - f_ref||
  double dist_to_scaled_ref = 0.0;   // ||g - y*(y0) f_ref||
};

ScalarProjection scalar_projection(const LipschitzMap& g_map, const Molecule& u,
                                   const std::vector<double>& f_ref,
                                   const std::vector<double>& y0);

struct FailureWitness {
  LipschitzMap f;
  Molecule m;
  double value = 0.0;          // ||F_hat(m)||
  double certified_min = 0.0;  // certified best attaining distance
};

struct ModulusEstimate {
  double eps = 0.0;
  std::optional<double> eta_upper;  // from the best certified failure
  double eta_lower = 0.0;           // empirical: all sampled queries above solved
  int samples = 0;
  std::vector<FailureWitness> failures;
  bool budget_exhausted = false;
};

ModulusEstimate modulus_estimate(const SpacePtr& space, const NormSpec& target, double eps,
                                 int budget, std::uint64_t seed,
                                 const std::vector<LipschitzMap>& witness_maps = {});

// The named query maps of the counterexample families; used by the modulus
// grid and the reproduction experiments.
LipschitzMap quasibeta_family_map(const SpacePtr& line3, int k);
LipschitzMap integer_line_map(const SpacePtr& line, int n);   // slope-one with one flat step
LipschitzMap parabola_map(const SpacePtr& parabola, int n);   // same formula on the parabola

}  // namespace freelip
