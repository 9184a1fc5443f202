#include "freelip/min_cost_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace freelip {

namespace {

struct ResidualArc {
  int head = 0;
  int arc = -1;     // index into net.arcs
  bool forward = true;
};

}  // namespace

FlowResult mcf_solve(const FlowNetwork& net) {
  const int n = net.nodes;
  if (static_cast<int>(net.imbalance.size()) != n) throw Error("mcf_solve: imbalance size mismatch");
  double scale = 1.0, total = 0.0;
  for (const auto& a : net.arcs) {
    if (a.tail < 0 || a.tail >= n || a.head < 0 || a.head >= n || a.tail == a.head)
      throw Error("mcf_solve: bad arc endpoints");
    if (a.cost < 0.0) throw Error("mcf_solve: negative arc cost");
    scale = std::max(scale, 1.0 + a.cost);
  }
  for (double b : net.imbalance) {
    total += b;
    scale = std::max(scale, 1.0 + std::abs(b));
  }
  if (std::abs(total) > 1e-12 * scale) throw Error("mcf_solve: imbalances do not sum to zero");

  std::vector<std::vector<ResidualArc>> adj(n);
  for (int k = 0; k < static_cast<int>(net.arcs.size()); ++k) {
    adj[net.arcs[k].tail].push_back({net.arcs[k].head, k, true});
    adj[net.arcs[k].head].push_back({net.arcs[k].tail, k, false});
  }

  FlowResult res;
  res.flow.assign(net.arcs.size(), 0.0);
  std::vector<double> excess = net.imbalance;
  std::vector<double> h(n, 0.0);  // Johnson potentials: c + h(u) - h(v) >= 0 on residual arcs
  const double excess_tol = 1e-13 * scale;
  const double flow_tol = 1e-13 * scale;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> dist(n);
  std::vector<int> prev_node(n), prev_arc(n);
  std::vector<char> done(n);

  for (;;) {
    int src = -1;
    for (int i = 0; i < n; ++i)
      if (excess[i] > excess_tol) {
        src = i;
        break;
      }
    if (src < 0) break;

    // Dijkstra over the residual graph with reduced costs.
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    std::fill(prev_node.begin(), prev_node.end(), -1);
    dist[src] = 0.0;
    int sink = -1;
    for (;;) {
      int u = -1;
      double du = inf;
      for (int i = 0; i < n; ++i)
        if (!done[i] && dist[i] < du) {
          du = dist[i];
          u = i;
        }
      if (u < 0) break;
      done[u] = 1;
      if (excess[u] < -excess_tol && sink < 0) {
        sink = u;
        break;
      }
      for (const auto& ra : adj[u]) {
        if (!ra.forward && res.flow[ra.arc] <= flow_tol) continue;
        const double c = ra.forward ? net.arcs[ra.arc].cost : -net.arcs[ra.arc].cost;
        double rc = c + h[u] - h[ra.head];
        if (rc < 0.0) rc = 0.0;  // clip roundoff
        if (dist[u] + rc < dist[ra.head]) {
          dist[ra.head] = dist[u] + rc;
          prev_node[ra.head] = u;
          prev_arc[ra.head] = ra.forward ? ra.arc : ~ra.arc;
        }
      }
    }
    if (sink < 0) throw Error("mcf_solve: deficit unreachable from supply");

    const double d_sink = dist[sink];
    for (int i = 0; i < n; ++i) h[i] += std::min(dist[i], d_sink);

    // Bottleneck along the path: backward arcs cap the push by their flow.
    double push = std::min(excess[src], -excess[sink]);
    for (int v = sink; v != src; v = prev_node[v]) {
      const int code = prev_arc[v];
      if (code < 0) push = std::min(push, res.flow[~code]);
    }
    for (int v = sink; v != src; v = prev_node[v]) {
      const int code = prev_arc[v];
      if (code >= 0) res.flow[code] += push;
      else res.flow[~code] -= push;
    }
    excess[src] -= push;
    excess[sink] += push;
    ++res.augmentations;
  }

  for (size_t k = 0; k < net.arcs.size(); ++k) {
    if (res.flow[k] < 0.0) res.flow[k] = 0.0;
    res.total_cost += res.flow[k] * net.arcs[k].cost;
  }
  // Report potentials in the convention cost(u,v) - pi(u) + pi(v) >= -tol.
  res.potential.assign(n, 0.0);
  for (int i = 0; i < n; ++i) res.potential[i] = -h[i];
  return res;
}

}  // namespace freelip
