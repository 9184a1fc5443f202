#pragma once

#include "freelip/common.hpp"
#include "freelip/metric_space.hpp"

namespace freelip {

// Random space generators used by property tests and the sweep experiments.

// Points sampled in a Euclidean box, resampled until well separated.
SpacePtr random_euclidean_space(Rng& rng, int n, int dim = 2);

// Snowflake of a random Euclidean space; always uniformly Gromov concave.
SpacePtr random_concave_space(Rng& rng, int n, double theta = 0.5);

// Distances from a random binary merge tree with strictly decreasing level
// heights; d(i,j) = height of the lowest common ancestor.
SpacePtr random_ultrametric(Rng& rng, int n);

// Random symmetric weights repaired by an all-pairs shortest-path pass.
// Produces valid metrics that typically contain exact triangle equalities.
SpacePtr random_shortest_path_space(Rng& rng, int n);

}  // namespace freelip
