#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "freelip/free_space.hpp"

namespace freelip {

struct ExposureCertificate {
  Molecule m;
  std::vector<double> f;  // per point, 0 at base; 1-Lipschitz
  // Largest action of f on any molecule other than +-m; 1 - optimal margin.
  // -inf sentinel when no competitor exists (two-point space).
  double rho_gap = 0.0;
  bool feasible = false;
  // Caratheodory witness when m is not a vertex.
  std::optional<std::vector<DecompositionAtom>> witness;
};

struct MoleculeSeparation {
  int p = -1, q = -1;
  bool feasible = false;
  double rho_gap = 0.0;
};

struct SeparationReport {
  std::vector<MoleculeSeparation> per_molecule;
  double max_rho = 0.0;  // 0 sentinel when no molecule has competitors
  std::vector<Molecule> non_vertices;
};

enum class SliceMethod { ExactPolytope, MoleculeRestricted };

struct SliceDiameterResult {
  std::vector<double> functional;
  double delta = 0.0;
  double diameter = 0.0;
  std::optional<std::pair<FreeVector, FreeVector>> attaining;
  SliceMethod method = SliceMethod::ExactPolytope;
};

struct ExposureProfile {
  std::vector<double> eps;
  std::vector<double> delta;  // largest dyadic delta with max slice diameter < eps; 0 = none
};

struct AlphaWitness {
  std::vector<Molecule> gamma;                   // ball vertices, ordered pairs
  std::vector<std::vector<double>> functionals;  // canonical exposing functional per element
  double rho = 0.0;       // max cross action over gamma
  double delta_min = 0.0; // minimal positive canonical-decomposition weight over Mol(M)
};

struct ExposeOptions {
  // Lexicographic-minimal functional after fixing the optimal margin. The
  // margin, feasibility and rho_gap do not depend on this.
  bool canonical = true;
  double feasibility_tol = 1e-9;
  double strict_tol = 1e-12;
};

// Cached dual geometry of one space: ball vertices, edge adjacency (LP
// midpoint oracle), exposing functionals and slice diameters. All heavy work
// is memoized; reuse one instance per space.
class ExposureAnalysis {
 public:
  explicit ExposureAnalysis(SpacePtr space, ExposeOptions opts = {});

  const SpacePtr& space() const { return space_; }
  const std::vector<Molecule>& vertices();
  const std::vector<std::pair<int, int>>& edges();  // indices into vertices()

  const ExposureCertificate& exposing(int p, int q);

  SliceDiameterResult slice_diameter(const std::vector<double>& f, double delta,
                                     SliceMethod method);
  // max over all ordered molecules m of the exact diameter of S(B, f_m, delta).
  double max_slice_diameter(double delta);
  ExposureProfile profile(const std::vector<double>& eps_grid);
  double delta_for(double eps);

 private:
  ExposureCertificate solve_exposing(const Molecule& m);

  SpacePtr space_;
  ExposeOptions opts_;
  std::optional<std::vector<Molecule>> vertices_;
  std::optional<std::vector<std::pair<int, int>>> edges_;
  std::map<std::pair<int, int>, ExposureCertificate> exposing_;
  std::map<double, double> max_diam_;  // delta -> max exact diameter
};

ExposureCertificate exposing_functional(const Molecule& m, ExposeOptions opts = {});
SeparationReport rho_separation(const SpacePtr& space, ExposeOptions opts = {});
SliceDiameterResult slice_diameter(const SpacePtr& space, const std::vector<double>& f,
                                   double delta,
                                   SliceMethod method = SliceMethod::ExactPolytope);
ExposureProfile uniform_exposure_profile(const SpacePtr& space,
                                         const std::vector<double>& eps_grid,
                                         ExposeOptions opts = {});
AlphaWitness alpha_witness(const SpacePtr& space, ExposeOptions opts = {});

}  // namespace freelip
