#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmd/error.hpp"
#include "kmd/kd_tree.hpp"
#include "kmd/point_set.hpp"
#include "kmd/rng.hpp"

namespace kmd {

enum class GraphKind { knn_directed, knn_undirected, mst };

inline const char* to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::knn_directed: return "knn";
    case GraphKind::knn_undirected: return "knn-undirected";
    case GraphKind::mst: return "mst";
  }
  return "?";
}

// Graph functionals entering the exact permutation variance:
// g1 = mean inverse out-degree, g2 = g1 + mean over vertices of the
// ordered-pair sum over distinct in-neighbors of 1/(d_j d_l), g3 = mean
// over ordered mutual arcs of 1/(d_i d_j).
struct GraphStats {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

// Out-neighbor adjacency over n vertices, stored as CSR with each row
// sorted by vertex id. Undirected graphs (undirected k-NN, MST) store
// every edge as two directed arcs so that a single estimator code path
// over out-arcs serves all graph kinds.
class DirectedGeometricGraph {
 public:
  DirectedGeometricGraph(GraphKind kind, int k, std::vector<int> offsets,
                         std::vector<int> arcs)
      : kind_(kind), k_(k), offsets_(std::move(offsets)),
        arcs_(std::move(arcs)) {
    for (std::size_t i = 0; i + 1 < offsets_.size(); ++i)
      std::sort(arcs_.begin() + offsets_[i], arcs_.begin() + offsets_[i + 1]);
    compute_max_total_degree();
  }

  int size() const { return static_cast<int>(offsets_.size()) - 1; }
  GraphKind kind() const { return kind_; }
  int k() const { return k_; }

  int out_degree(int i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const int> out_neighbors(int i) const {
    return {arcs_.data() + offsets_[i],
            static_cast<std::size_t>(out_degree(i))};
  }

  bool has_arc(int i, int j) const {
    auto row = out_neighbors(i);
    return std::binary_search(row.begin(), row.end(), j);
  }

  // Largest |out(i) ∪ in(i)| over vertices; the degree notion bounded by
  // t_n in the CLT assumptions.
  int max_total_degree() const { return max_total_degree_; }

 private:
  void compute_max_total_degree() {
    int n = size();
    // |out(i) ∪ in(i)| = d_out + d_in - #mutual arcs at i
    std::vector<int> in_degree(n, 0), mutual(n, 0);
    for (int i = 0; i < n; ++i)
      for (int j : out_neighbors(i)) {
        ++in_degree[j];
        if (has_arc(j, i)) ++mutual[i];
      }
    max_total_degree_ = 0;
    for (int i = 0; i < n; ++i)
      max_total_degree_ = std::max(
          max_total_degree_, out_degree(i) + in_degree[i] - mutual[i]);
  }

  GraphKind kind_;
  int k_;
  std::vector<int> offsets_;
  std::vector<int> arcs_;
  int max_total_degree_ = 0;
};

namespace detail {

// Exact k smallest candidates under the (distance, priority, index) total
// order, by full scan. Used for distance-matrix input, high dimensions
// where a k-d tree degrades, and small n.
inline void brute_force_knn(const PointSet& points, int self, int k,
                            std::uint64_t seed, std::vector<int>& out) {
  int n = points.size();
  std::vector<NeighborCandidate> cand;
  cand.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    if (j == self) continue;
    cand.push_back({points.squared_distance(self, j),
                    rng::tie_priority(seed, self, j), j});
  }
  std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
  out.clear();
  for (int t = 0; t < k; ++t) out.push_back(cand[t].index);
}

inline DirectedGeometricGraph symmetrize(int n, int k,
                                         const std::vector<int>& flat_knn) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t) {
      int j = flat_knn[static_cast<std::size_t>(i) * k + t];
      edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<int> offsets(n + 1, 0);
  for (auto [a, b] : edges) {
    ++offsets[a + 1];
    ++offsets[b + 1];
  }
  for (int i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<int> arcs(2 * edges.size());
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (auto [a, b] : edges) {
    arcs[cursor[a]++] = b;
    arcs[cursor[b]++] = a;
  }
  return DirectedGeometricGraph(GraphKind::knn_undirected, k,
                                std::move(offsets), std::move(arcs));
}

}  // namespace detail

// k-NN graph construction. Euclidean input with d <= 30 uses a k-d tree
// (O(kn log n) expected); otherwise per-vertex selection in O(n^2).
// Given (points, k, seed) the result is bit-identical for every thread
// count: tie-breaking uses stateless per-(vertex, candidate) priorities.
inline DirectedGeometricGraph build_knn(const PointSet& points, int k,
                                        bool directed, std::uint64_t seed,
                                        int threads = 0) {
  int n = points.size();
  if (n < 2) throw InvalidInputError("need at least 2 points");
  if (k < 1 || k >= n)
    throw InvalidInputError("k must satisfy 1 <= k <= n-1, got k=" +
                            std::to_string(k) + ", n=" + std::to_string(n));

  std::vector<int> flat(static_cast<std::size_t>(n) * k);
  bool use_tree = points.euclidean() && points.dim() <= 30 && n > 64;
  if (use_tree) {
    KdTree tree(points.coords().data(), n, points.dim(), 24);
    // Queries run in tree order: consecutive queries are spatially close,
    // which keeps the scanned leaves in cache.
    exec::parallel_for(
        n,
        [&](std::size_t pos) {
          int self = tree.point_at(static_cast<int>(pos));
          std::vector<int> row;
          tree.knn(self, k, seed, row);
          std::copy(row.begin(), row.end(),
                    flat.begin() + static_cast<std::size_t>(self) * k);
        },
        threads);
  } else {
    exec::parallel_for(
        n,
        [&](std::size_t i) {
          std::vector<int> row;
          detail::brute_force_knn(points, static_cast<int>(i), k, seed, row);
          std::copy(row.begin(), row.end(), flat.begin() + i * k);
        },
        threads);
  }

  if (!directed) return detail::symmetrize(n, k, flat);

  std::vector<int> offsets(n + 1);
  for (int i = 0; i <= n; ++i) offsets[i] = i * k;
  return DirectedGeometricGraph(GraphKind::knn_directed, k,
                                std::move(offsets), std::move(flat));
}

// Minimum spanning tree by Prim's algorithm over the dense distance
// matrix, O(n^2). The n-1 edges are stored as 2(n-1) arcs.
inline DirectedGeometricGraph build_mst(const PointSet& points) {
  int n = points.size();
  if (n < 2) throw InvalidInputError("need at least 2 points");

  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, 0);
  std::vector<bool> in_tree(n, false);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(n - 1);

  int current = 0;
  in_tree[0] = true;
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      double d = points.squared_distance(current, j);
      if (d < best[j]) {
        best[j] = d;
        best_from[j] = current;
      }
    }
    int next = -1;
    for (int j = 0; j < n; ++j)
      if (!in_tree[j] && (next < 0 || best[j] < best[next])) next = j;
    edges.emplace_back(best_from[next], next);
    in_tree[next] = true;
    current = next;
  }

  std::vector<int> offsets(n + 1, 0);
  for (auto [a, b] : edges) {
    ++offsets[a + 1];
    ++offsets[b + 1];
  }
  for (int i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<int> arcs(2 * edges.size());
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (auto [a, b] : edges) {
    arcs[cursor[a]++] = b;
    arcs[cursor[b]++] = a;
  }
  return DirectedGeometricGraph(GraphKind::mst, 0, std::move(offsets),
                                std::move(arcs));
}

// g2 uses the in-neighbor scheme: for vertex i with in-neighbors
// {i_1..i_k'}, S_i = (sum 1/d_{i_j})^2 - sum 1/d_{i_j}^2, and
// g2 = g1 + (1/n) sum S_i. Runs in O(kn + n) given the adjacency.
inline GraphStats graph_stats(const DirectedGeometricGraph& graph) {
  int n = graph.size();
  std::vector<double> inv_deg(n);
  GraphStats stats;
  bool uniform_degree = true;
  for (int i = 0; i < n; ++i) {
    int d = graph.out_degree(i);
    if (d < 1) throw InvalidInputError("graph has an isolated vertex");
    inv_deg[i] = 1.0 / d;
    stats.g1 += inv_deg[i];
    uniform_degree = uniform_degree && d == graph.out_degree(0);
  }
  // Constant out-degree (directed k-NN) gives g1 = 1/k exactly.
  stats.g1 = uniform_degree ? inv_deg[0] : stats.g1 / n;

  std::vector<double> in_sum(n, 0.0), in_sum_sq(n, 0.0);
  double g3 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j : graph.out_neighbors(i)) {
      in_sum[j] += inv_deg[i];
      in_sum_sq[j] += inv_deg[i] * inv_deg[i];
      if (graph.has_arc(j, i)) g3 += inv_deg[i] * inv_deg[j];
    }
  }
  double pair_sum = 0.0;
  for (int i = 0; i < n; ++i)
    pair_sum += in_sum[i] * in_sum[i] - in_sum_sq[i];
  stats.g2 = stats.g1 + pair_sum / n;
  stats.g3 = g3 / n;
  return stats;
}

// Kissing-number style bound on how many points can share a given point
// among their k nearest neighbors in dimension d; used only to flag
// suspicious degrees, never to reject.
inline long long knn_degree_bound(int k, int dim) {
  int e = std::min(dim, 12);
  long long c = 1;
  for (int i = 0; i < e; ++i) c *= 3;
  return static_cast<long long>(k) * (c + 1);
}

}  // namespace kmd
