#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "kmd/rng.hpp"

namespace kmd {

// Candidate ordering used for k-NN selection everywhere in the library:
// squared distance first, then a per-(query, candidate) random priority,
// then the index. Exact distance ties are thereby broken uniformly at
// random given the seed, and the selected set does not depend on
// traversal order.
struct NeighborCandidate {
  double dist2;
  std::uint64_t priority;
  int index;

  friend bool operator<(const NeighborCandidate& a,
                        const NeighborCandidate& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.index < b.index;
  }
};

// Bounded worst-first buffer holding the k smallest candidates seen.
class NeighborHeap {
 public:
  explicit NeighborHeap(int k) : k_(k) { items_.reserve(k); }

  bool full() const { return static_cast<int>(items_.size()) == k_; }
  double worst_dist2() const {
    return full() ? items_.front().dist2
                  : std::numeric_limits<double>::infinity();
  }

  void offer(const NeighborCandidate& c) {
    if (!full()) {
      items_.push_back(c);
      std::push_heap(items_.begin(), items_.end());
    } else if (c < items_.front()) {
      std::pop_heap(items_.begin(), items_.end());
      items_.back() = c;
      std::push_heap(items_.begin(), items_.end());
    }
  }

  const std::vector<NeighborCandidate>& items() const { return items_; }

 private:
  int k_;
  std::vector<NeighborCandidate> items_;
};

// Median-split k-d tree over an externally owned row-major coordinate
// array. Queries return exact k nearest neighbors under the candidate
// total order above; subtrees are pruned only when strictly farther than
// the current worst, so equal-distance ties are always visited.
class KdTree {
 public:
  KdTree(const double* coords, int n, int dim, int leaf_size = 16)
      : coords_(coords), n_(n), dim_(dim), leaf_size_(leaf_size) {
    order_.resize(n);
    for (int i = 0; i < n; ++i) order_[i] = i;
    nodes_.reserve(2 * static_cast<std::size_t>(n) / leaf_size + 2);
    root_ = build(0, n);
    // Pack coordinates in tree order so leaf scans stay cache-local.
    packed_.resize(static_cast<std::size_t>(n) * dim);
    for (int pos = 0; pos < n; ++pos)
      for (int t = 0; t < dim; ++t)
        packed_[static_cast<std::size_t>(pos) * dim + t] =
            coords_[static_cast<std::size_t>(order_[pos]) * dim + t];
  }

  // Vertex id stored at tree position `pos`; iterating queries in tree
  // order keeps consecutive searches cache-local.
  int point_at(int pos) const { return order_[pos]; }

  // k nearest neighbors of vertex `self`, excluding itself.
  void knn(int self, int k, std::uint64_t seed, std::vector<int>& out) const {
    NeighborHeap heap(k);
    std::vector<double> axis_off(dim_, 0.0);
    search(root_, coords_ + static_cast<std::size_t>(self) * dim_, self, seed,
           0.0, axis_off, heap);
    out.clear();
    for (const auto& c : heap.items()) out.push_back(c.index);
  }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
    int split_dim = -1;
    double left_max = 0.0;
    double right_min = 0.0;
  };

  double coord(int idx, int d) const {
    return coords_[static_cast<std::size_t>(idx) * dim_ + d];
  }

  double squared_distance_packed(const double* q, int pos) const {
    const double* p = packed_.data() + static_cast<std::size_t>(pos) * dim_;
    double s = 0.0;
    for (int t = 0; t < dim_; ++t) {
      double diff = q[t] - p[t];
      s += diff * diff;
    }
    return s;
  }

  int build(int begin, int end) {
    int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= leaf_size_) return id;

    // Split along the axis with the largest spread.
    int dim = 0;
    double best_spread = -1.0;
    for (int d = 0; d < dim_; ++d) {
      double lo = coord(order_[begin], d), hi = lo;
      for (int i = begin + 1; i < end; ++i) {
        double v = coord(order_[i], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        dim = d;
      }
    }
    if (best_spread <= 0.0) return id;  // all points coincide

    int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       return coord(a, dim) < coord(b, dim);
                     });
    double left_max = coord(order_[begin], dim);
    for (int i = begin + 1; i < mid; ++i)
      left_max = std::max(left_max, coord(order_[i], dim));
    double right_min = coord(order_[mid], dim);
    for (int i = mid + 1; i < end; ++i)
      right_min = std::min(right_min, coord(order_[i], dim));

    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[id].split_dim = dim;
    nodes_[id].left_max = left_max;
    nodes_[id].right_min = right_min;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(int node_id, const double* q, int self, std::uint64_t seed,
              double box_dist2, std::vector<double>& axis_off,
              NeighborHeap& heap) const {
    const Node& node = nodes_[node_id];
    if (node.split_dim < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        int idx = order_[i];
        if (idx == self) continue;
        double d2 = squared_distance_packed(q, i);
        if (d2 > heap.worst_dist2()) continue;
        heap.offer({d2, rng::tie_priority(seed, self, idx), idx});
      }
      return;
    }

    int d = node.split_dim;
    double v = q[d];
    int near, far;
    double gap;
    if (v - node.left_max < node.right_min - v) {
      near = node.left;
      far = node.right;
      gap = std::max(0.0, node.right_min - v);
    } else {
      near = node.right;
      far = node.left;
      gap = std::max(0.0, v - node.left_max);
    }
    search(near, q, self, seed, box_dist2, axis_off, heap);

    double old = axis_off[d];
    double far_dist2 = box_dist2 - old + gap * gap;
    if (far_dist2 <= heap.worst_dist2()) {
      axis_off[d] = gap * gap;
      search(far, q, self, seed, far_dist2, axis_off, heap);
      axis_off[d] = old;
    }
  }

  const double* coords_;
  int n_, dim_, leaf_size_;
  int root_ = 0;
  std::vector<int> order_;
  std::vector<double> packed_;
  std::vector<Node> nodes_;
};

}  // namespace kmd
