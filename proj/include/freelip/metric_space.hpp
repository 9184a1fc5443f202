#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "freelip/common.hpp"

namespace freelip {

// One failed metric axiom together with the entries that witness it.
struct MetricViolation {
  enum class Kind {
    NotSquare,
    NonFinite,
    BadBase,
    TooFewPoints,
    NonzeroDiagonal,
    Asymmetry,
    NonpositiveOffDiagonal,
    TriangleViolation,
  };
  Kind kind{};
  int i = -1, j = -1, k = -1;
  double lhs = 0.0, rhs = 0.0;

  std::string describe(const std::vector<std::string>& labels) const;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<MetricViolation> violations)
      : Error(what), violations_(std::move(violations)) {}
  const std::vector<MetricViolation>& violations() const { return violations_; }

 private:
  std::vector<MetricViolation> violations_;
};

// Finite pointed metric space. Immutable after construction; all operations
// on it are side-effect free and safe to run concurrently.
class PointedMetricSpace {
 public:
  static std::vector<MetricViolation> check(const std::vector<std::string>& labels, int base,
                                            const std::vector<std::vector<double>>& dist,
                                            double tol = 1e-9);

  // Throws ValidationError listing every violated axiom.
  static PointedMetricSpace validated(std::vector<std::string> labels, int base,
                                      std::vector<std::vector<double>> dist, double tol = 1e-9);

  int size() const { return static_cast<int>(labels_.size()); }
  int base() const { return base_; }
  const std::string& label(int i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  double dist(int i, int j) const { return dist_[i][j]; }
  const std::vector<std::vector<double>>& dist_matrix() const { return dist_; }
  double max_dist() const { return max_dist_; }
  // Scale used for relative tolerances on this space.
  double scale() const { return 1.0 + max_dist_; }

  int find_label(const std::string& name) const;  // -1 when absent

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

 private:
  PointedMetricSpace(std::vector<std::string> labels, int base,
                     std::vector<std::vector<double>> dist);

  std::vector<std::string> labels_;
  int base_ = 0;
  std::vector<std::vector<double>> dist_;
  double max_dist_ = 0.0;
  std::string id_;
};

using SpacePtr = std::shared_ptr<const PointedMetricSpace>;

SpacePtr make_space(std::vector<std::string> labels, int base,
                    std::vector<std::vector<double>> dist, double tol = 1e-9);

struct TripleRef {
  int x = -1, y = -1, z = -1;
};

struct PairConcavity {
  int x = -1, y = -1;  // unordered, x < y
  bool concave = false;
};

struct MetricReport {
  std::vector<PairConcavity> pairs;
  bool concave = false;
  bool ultrametric = false;
  double gromov_constant = 0.0;  // the epsilon_0 of the uniform concavity test
  TripleRef witness_triple;
  std::vector<TripleRef> degenerate_triples;
};

struct HolderReport {
  double theta = 0.0;
  double bound = 0.0;      // (2 - 2^theta)/2
  double min_ratio = 0.0;  // gromov constant of the snowflaked space
  bool pass = false;
};

// (x,y)_z = (d(x,z) + d(z,y) - d(x,y))/2. Indices must be distinct.
double gromov_product(const PointedMetricSpace& m, int x, int y, int z);

// Exhaustive triple scan: per-pair strict concavity, ultrametric flag and the
// Gromov concavity constant with its witness triple. Triples whose triangle
// inequality is tight within `strict_tol * scale` are reported degenerate.
MetricReport analyze(const PointedMetricSpace& m, double strict_tol = 1e-12);

// The space (M, d^theta), 0 < theta < 1. Always a valid metric.
PointedMetricSpace snowflake(const PointedMetricSpace& m, double theta);

HolderReport holder_bound_check(const PointedMetricSpace& m, double theta, double tol = 1e-9);

// Named finite truncations: "integer-line" = {1..N} with |p-q| based at 1,
// "parabola" = {(n, 1/n^2) : n = 1..N} with the Euclidean metric based at the
// first point.
PointedMetricSpace truncated_family(const std::string& name, int n_points);

double scalar_lip_norm(const PointedMetricSpace& m, const std::vector<double>& f);

}  // namespace freelip
