#include "freelip/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace freelip {

namespace {

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  return labels;
}

}  // namespace

SpacePtr random_euclidean_space(Rng& rng, int n, int dim) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& c : p) c = rng.uniform(0.0, 10.0);
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    double min_sep = 1e300;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
        dist[i][j] = dist[j][i] = std::sqrt(s);
        min_sep = std::min(min_sep, dist[i][j]);
      }
    if (min_sep < 0.2) continue;
    return make_space(default_labels(n), 0, std::move(dist));
  }
  throw Error("random_euclidean_space: could not separate points");
}

SpacePtr random_concave_space(Rng& rng, int n, double theta) {
  auto base = random_euclidean_space(rng, n);
  auto flake = snowflake(*base, theta);
  return std::make_shared<PointedMetricSpace>(std::move(flake));
}

SpacePtr random_ultrametric(Rng& rng, int n) {
  // Merge random clusters bottom-up; every merge happens strictly above all
  // earlier ones, so the LCA heights form an ultrametric.
  std::vector<std::vector<int>> clusters(n);
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  double height = 0.0;
  while (clusters.size() > 1) {
    height += rng.uniform(0.5, 1.5);
    int a = rng.uniform_int(static_cast<int>(clusters.size()));
    int b = rng.uniform_int(static_cast<int>(clusters.size()) - 1);
    if (b >= a) ++b;
    for (int i : clusters[a])
      for (int j : clusters[b]) dist[i][j] = dist[j][i] = height;
    clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
    clusters.erase(clusters.begin() + b);
  }
  return make_space(default_labels(n), 0, std::move(dist));
}

SpacePtr random_shortest_path_space(Rng& rng, int n) {
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = rng.uniform(0.5, 4.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && i != k && j != k) {
          const double via = dist[i][k] + dist[k][j];
          if (via < dist[i][j]) dist[i][j] = via;
        }
  // Re-symmetrize; the relaxation order can break exact symmetry.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dist[j][i] = dist[i][j] = std::min(dist[i][j], dist[j][i]);
  return make_space(default_labels(n), 0, std::move(dist));
}

}  // namespace freelip
