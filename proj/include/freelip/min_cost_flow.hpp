#pragma once

#include <vector>

#include "freelip/common.hpp"

namespace freelip {

struct FlowArc {
  int tail = 0, head = 0;
  double cost = 0.0;  // nonnegative; capacity is unbounded
};

struct FlowNetwork {
  int nodes = 0;
  std::vector<FlowArc> arcs;
  std::vector<double> imbalance;  // positive = supply; must sum to ~0
};

struct FlowResult {
  std::vector<double> flow;       // per arc, >= 0
  double total_cost = 0.0;
  std::vector<double> potential;  // cost(u,v) - pi(u) + pi(v) >= -tol on all arcs
  int augmentations = 0;
};

// Successive shortest paths with node potentials. Throws on unbalanced
// imbalances, negative costs, or unreachable deficits.
FlowResult mcf_solve(const FlowNetwork& net);

}  // namespace freelip
