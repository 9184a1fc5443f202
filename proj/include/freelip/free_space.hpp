#pragma once

#include <optional>
#include <vector>

#include "freelip/metric_space.hpp"

namespace freelip {

// Element of the free space over M as coefficients of the point evaluations;
// the base point's coefficient is identically zero.
struct FreeVector {
  SpacePtr space;
  std::vector<double> coeff;  // size n, coeff[base] == 0

  FreeVector() = default;
  FreeVector(SpacePtr s, std::vector<double> c);

  FreeVector& operator+=(const FreeVector& o);
  FreeVector& operator-=(const FreeVector& o);
  FreeVector& operator*=(double s);
};

FreeVector operator+(FreeVector a, const FreeVector& b);
FreeVector operator-(FreeVector a, const FreeVector& b);
FreeVector operator*(double s, FreeVector a);

FreeVector delta(const SpacePtr& space, int p);  // the evaluation functional of p

// The normalized elementary difference (delta_p - delta_q)/d(p,q).
struct Molecule {
  SpacePtr space;
  int p = -1, q = -1;

  FreeVector vector() const;
  Molecule swapped() const { return {space, q, p}; }
  // Closed-form norming potential x -> d(x,q) - d(base,q); pairs to exactly 1.
  std::vector<double> norming_potential() const;
};

bool same_pair(const Molecule& a, const Molecule& b);
bool same_unordered_pair(const Molecule& a, const Molecule& b);

// All n(n-1) ordered molecules in lexicographic (p,q) order.
std::vector<Molecule> molecule_set(const SpacePtr& space);
// Canonical unordered listing (p < q).
std::vector<Molecule> molecule_set_unordered(const SpacePtr& space);
int molecule_index(const PointedMetricSpace& space, int p, int q);  // into the ordered set

struct ArcFlow {
  int p = -1, q = -1;   // w * (delta_p - delta_q)
  double weight = 0.0;  // > 0
};

// Free norm value with a primal transport plan and a dual 1-Lipschitz
// potential obtained by independent solvers; gap = |primal - dual|.
struct NormCertificate {
  double value = 0.0;
  std::vector<ArcFlow> primal;
  std::vector<double> dual_potential;  // per point, 0 at base
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double scale = 1.0;

  bool verify(const PointedMetricSpace& m, const std::vector<double>& coeff,
              double tol = 1e-8) const;
};

// Kantorovich-Rubinstein certificate: primal via min-cost flow on the support
// plus base, dual via LP, potential extended to all of M.
NormCertificate free_norm(const FreeVector& x);

// Value-only route (min-cost flow with its own optimality check); used in
// candidate enumerations where the LP certificate is not needed.
double free_norm_value(const FreeVector& x);

double molecule_distance(const Molecule& a, const Molecule& b);

struct DecompositionAtom {
  Molecule m;
  double weight = 0.0;
};

// Canonical convex decomposition over the ball vertices: total weight is
// minimal (= the free norm), then weights are maximized greedily in molecule
// index order. Throws when the free norm exceeds 1 beyond tolerance.
std::vector<DecompositionAtom> convex_decompose(const FreeVector& x, double tol = 1e-9);

// Molecules that are extreme points of the ball: strict triangle inequality
// d(p,q) < d(p,z) + d(z,q) for every z outside the pair. Ordered molecules;
// -m appears as the swapped pair.
std::vector<Molecule> ball_vertices(const SpacePtr& space, double strict_tol = 1e-12);
bool is_ball_vertex(const PointedMetricSpace& space, int p, int q, double strict_tol = 1e-12);

// f(x) applied to the linearization: sum coeff_p f(p).
double pair_with(const std::vector<double>& f, const FreeVector& x);
double pair_with(const std::vector<double>& f, const Molecule& m);

}  // namespace freelip
