#include "freelip/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace freelip {

namespace {

std::string point_name(const std::vector<std::string>& labels, int i) {
  if (i < 0 || i >= static_cast<int>(labels.size())) return "#" + std::to_string(i);
  return labels[i];
}

}  // namespace

std::string MetricViolation::describe(const std::vector<std::string>& labels) const {
  std::ostringstream os;
  switch (kind) {
    case Kind::NotSquare:
      os << "matrix is not square (row " << i << " has length " << lhs << ", expected " << rhs
         << ")";
      break;
    case Kind::NonFinite:
      os << "non-finite entry at (" << point_name(labels, i) << ", " << point_name(labels, j)
         << ")";
      break;
    case Kind::BadBase:
      os << "base index " << i << " out of range";
      break;
    case Kind::TooFewPoints:
      os << "space needs at least 2 points, got " << i;
      break;
    case Kind::NonzeroDiagonal:
      os << "nonzero diagonal at " << point_name(labels, i) << " (value " << lhs << ")";
      break;
    case Kind::Asymmetry:
      os << "asymmetry between " << point_name(labels, i) << " and " << point_name(labels, j)
         << " (" << lhs << " vs " << rhs << ")";
      break;
    case Kind::NonpositiveOffDiagonal:
      os << "zero distance between distinct points " << point_name(labels, i) << " and "
         << point_name(labels, j) << " (value " << lhs << ")";
      break;
    case Kind::TriangleViolation:
      os << "triangle violation (" << point_name(labels, i) << "," << point_name(labels, j)
         << ") via " << point_name(labels, k) << ": " << lhs << " > " << rhs;
      break;
  }
  return os.str();
}

std::vector<MetricViolation> PointedMetricSpace::check(const std::vector<std::string>& labels,
                                                       int base,
                                                       const std::vector<std::vector<double>>& dist,
                                                       double tol) {
  std::vector<MetricViolation> out;
  const int n = static_cast<int>(labels.size());
  if (n < 2) {
    out.push_back({MetricViolation::Kind::TooFewPoints, n, -1, -1, 0, 0});
  }
  if (base < 0 || base >= n) {
    out.push_back({MetricViolation::Kind::BadBase, base, -1, -1, 0, 0});
  }
  if (static_cast<int>(dist.size()) != n) {
    out.push_back({MetricViolation::Kind::NotSquare, -1, -1, -1,
                   static_cast<double>(dist.size()), static_cast<double>(n)});
    return out;
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(dist[i].size()) != n) {
      out.push_back({MetricViolation::Kind::NotSquare, i, -1, -1,
                     static_cast<double>(dist[i].size()), static_cast<double>(n)});
      return out;
    }
  }
  double scale = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(dist[i][j])) {
        out.push_back({MetricViolation::Kind::NonFinite, i, j, -1, dist[i][j], 0});
        return out;
      }
      scale = std::max(scale, 1.0 + std::abs(dist[i][j]));
    }
  const double eps = tol * scale;
  for (int i = 0; i < n; ++i) {
    if (std::abs(dist[i][i]) > eps)
      out.push_back({MetricViolation::Kind::NonzeroDiagonal, i, i, -1, dist[i][i], 0});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(dist[i][j] - dist[j][i]) > eps)
        out.push_back({MetricViolation::Kind::Asymmetry, i, j, -1, dist[i][j], dist[j][i]});
      if (dist[i][j] <= eps)
        out.push_back({MetricViolation::Kind::NonpositiveOffDiagonal, i, j, -1, dist[i][j], 0});
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double direct = dist[i][j];
        const double via = dist[i][k] + dist[k][j];
        if (direct > via + eps)
          out.push_back({MetricViolation::Kind::TriangleViolation, i, j, k, direct, via});
      }
    }
  return out;
}

PointedMetricSpace::PointedMetricSpace(std::vector<std::string> labels, int base,
                                       std::vector<std::vector<double>> dist)
    : labels_(std::move(labels)), base_(base), dist_(std::move(dist)) {
  for (const auto& row : dist_)
    for (double d : row) max_dist_ = std::max(max_dist_, d);
}

PointedMetricSpace PointedMetricSpace::validated(std::vector<std::string> labels, int base,
                                                 std::vector<std::vector<double>> dist,
                                                 double tol) {
  auto violations = check(labels, base, dist, tol);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "invalid metric space (" << violations.size() << " violation"
       << (violations.size() == 1 ? "" : "s") << "): " << violations.front().describe(labels);
    throw ValidationError(os.str(), std::move(violations));
  }
  // Symmetrize and zero the diagonal so downstream arithmetic sees exact values.
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    dist[i][i] = 0.0;
    for (int j = i + 1; j < n; ++j) dist[j][i] = dist[i][j];
  }
  return PointedMetricSpace(std::move(labels), base, std::move(dist));
}

int PointedMetricSpace::find_label(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (labels_[i] == name) return i;
  return -1;
}

SpacePtr make_space(std::vector<std::string> labels, int base, std::vector<std::vector<double>> dist,
                    double tol) {
  return std::make_shared<PointedMetricSpace>(
      PointedMetricSpace::validated(std::move(labels), base, std::move(dist), tol));
}

double gromov_product(const PointedMetricSpace& m, int x, int y, int z) {
  if (x == y || y == z || x == z) throw Error("gromov_product: indices must be distinct");
  if (x < 0 || y < 0 || z < 0 || x >= m.size() || y >= m.size() || z >= m.size())
    throw Error("gromov_product: index out of range");
  return 0.5 * (m.dist(x, z) + m.dist(z, y) - m.dist(x, y));
}

MetricReport analyze(const PointedMetricSpace& m, double strict_tol) {
  MetricReport rep;
  const int n = m.size();
  const double eps = strict_tol * m.scale();

  rep.gromov_constant = std::numeric_limits<double>::infinity();
  rep.ultrametric = true;

  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      for (int z = 0; z < n; ++z) {
        if (z == x || z == y) continue;
        const double gp = 0.5 * (m.dist(x, z) + m.dist(z, y) - m.dist(x, y));
        const double ratio = gp / std::min(m.dist(x, z), m.dist(y, z));
        if (ratio < rep.gromov_constant) {
          rep.gromov_constant = ratio;
          rep.witness_triple = {x, y, z};
        }
        if (x < y && std::abs(m.dist(x, y) - (m.dist(x, z) + m.dist(z, y))) <= eps)
          rep.degenerate_triples.push_back({x, y, z});
        if (m.dist(x, y) > std::max(m.dist(x, z), m.dist(z, y)) + eps) rep.ultrametric = false;
      }
    }
  if (!std::isfinite(rep.gromov_constant)) rep.gromov_constant = 0.0;  // n == 2
  rep.gromov_constant = std::max(rep.gromov_constant, 0.0);

  bool all_pairs_concave = true;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      bool concave = true;
      for (int z = 0; z < n && concave; ++z) {
        if (z == x || z == y) continue;
        if (m.dist(x, y) >= m.dist(x, z) + m.dist(z, y) - eps) concave = false;
      }
      rep.pairs.push_back({x, y, concave});
      all_pairs_concave = all_pairs_concave && concave;
    }
  rep.concave = rep.gromov_constant > strict_tol || all_pairs_concave;
  return rep;
}

PointedMetricSpace snowflake(const PointedMetricSpace& m, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error("snowflake: theta must lie in (0,1)");
  const int n = m.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) dist[i][j] = std::pow(m.dist(i, j), theta);
  return PointedMetricSpace::validated(m.labels(), m.base(), std::move(dist));
}

HolderReport holder_bound_check(const PointedMetricSpace& m, double theta, double tol) {
  HolderReport rep;
  rep.theta = theta;
  rep.bound = 0.5 * (2.0 - std::pow(2.0, theta));
  rep.min_ratio = analyze(snowflake(m, theta)).gromov_constant;
  rep.pass = rep.min_ratio >= rep.bound - tol;
  return rep;
}

PointedMetricSpace truncated_family(const std::string& name, int n_points) {
  if (n_points < 2) throw Error("truncated_family: need at least 2 points");
  std::vector<std::string> labels;
  labels.reserve(n_points);
  for (int p = 1; p <= n_points; ++p) labels.push_back(std::to_string(p));
  std::vector<std::vector<double>> dist(n_points, std::vector<double>(n_points, 0.0));
  if (name == "integer-line") {
    for (int p = 0; p < n_points; ++p)
      for (int q = 0; q < n_points; ++q) dist[p][q] = std::abs(p - q);
  } else if (name == "parabola") {
    for (int p = 0; p < n_points; ++p)
      for (int q = 0; q < n_points; ++q) {
        const double xp = p + 1, xq = q + 1;
        const double yp = 1.0 / (xp * xp), yq = 1.0 / (xq * xq);
        dist[p][q] = std::hypot(xp - xq, yp - yq);
      }
  } else {
    throw Error("truncated_family: unknown family '" + name + "'");
  }
  return PointedMetricSpace::validated(std::move(labels), 0, std::move(dist));
}

double scalar_lip_norm(const PointedMetricSpace& m, const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != m.size()) throw Error("scalar_lip_norm: size mismatch");
  double best = 0.0;
  for (int p = 0; p < m.size(); ++p)
    for (int q = p + 1; q < m.size(); ++q)
      best = std::max(best, std::abs(f[p] - f[q]) / m.dist(p, q));
  return best;
}

}  // namespace freelip
