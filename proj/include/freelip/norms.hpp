#pragma once

#include <string>
#include <vector>

#include "freelip/common.hpp"

namespace freelip {

// Finite-dimensional target norm. Polyhedral balls can be given by facet
// functionals, by vertices, or both; the Y_k family is kept symbolic so
// sweeps over k do not re-derive its representations.
struct NormSpec {
  enum class Variant { Lp, Linf, L1, Polyhedral, Yk };
  Variant variant = Variant::Linf;
  int dim = 1;
  double p = 2.0;  // Lp only
  int k = 2;       // Yk only
  std::vector<std::vector<double>> facets;    // symmetric, Polyhedral
  std::vector<std::vector<double>> vertices;  // symmetric spanning, Polyhedral

  static NormSpec lp(int dim, double p);
  static NormSpec linf(int dim);
  static NormSpec l1(int dim);
  static NormSpec yk(int k);
  static NormSpec scalar();  // R with |.|
  static NormSpec polyhedral_facets(std::vector<std::vector<double>> facets);
  static NormSpec polyhedral_vertices(std::vector<std::vector<double>> vertices);

  // Everything whose ball is a polytope: Linf, L1, Yk, Polyhedral.
  bool is_polyhedral() const { return variant != Variant::Lp; }
  std::string describe() const;
};

void validate_spec(const NormSpec& spec);

double norm_eval(const NormSpec& spec, const std::vector<double>& v);
double dual_eval(const NormSpec& spec, const std::vector<double>& f);

struct BallDescription {
  std::vector<std::vector<double>> vertices;
  std::vector<std::vector<double>> facets;
};

// Mutually consistent V- and H-representations of the unit ball; throws for
// non-polyhedral specs or if the consistency cross-checks fail.
BallDescription ball_description(const NormSpec& spec);

struct BetaPair {
  std::vector<double> functional;
  std::vector<double> point;
};

// One pair per +- facet class: the facet functional and the centroid of its
// touching vertices. rho is the maximum cross evaluation.
struct BetaWitness {
  std::vector<BetaPair> pairs;
  double rho = 0.0;
};

BetaWitness beta_witness(const NormSpec& spec);

// Checks the three defining conditions numerically; throws with the failing
// condition on violation. Probes condition (3) on random vectors.
void validate_beta_witness(const NormSpec& spec, const BetaWitness& w, Rng& rng,
                           double tol = 1e-9);

struct QuasiBetaCover {
  std::vector<double> extreme;  // extreme point of the dual ball
  double t = 1.0;               // |t| = 1
  std::vector<int> indices;     // subset of A
};

// User-supplied quasi-beta structure; validated, never synthesized.
struct QuasiBetaWitness {
  std::vector<std::vector<double>> functionals;  // the set A
  std::vector<std::vector<double>> sigma;        // unit vectors, sigma[i] for A[i]
  std::vector<double> rho;                       // rho[i] < 1
  std::vector<QuasiBetaCover> covers;
};

void validate_quasi_beta(const NormSpec& spec, const QuasiBetaWitness& w, double tol = 1e-9);

// Norming functional of v: the facet attaining norm_eval (polyhedral) or the
// closed-form gradient (lp). Normalized to dual norm one.
std::vector<double> norming_functional(const NormSpec& spec, const std::vector<double>& v);

}  // namespace freelip
