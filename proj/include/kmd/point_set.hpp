#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kmd/error.hpp"

namespace kmd {

// Pooled observations: either rows of Euclidean coordinates or a full
// precomputed distance matrix (for metrics like DTW or Jaccard that are
// computed elsewhere).
class PointSet {
 public:
  static PointSet from_points(int n, int dim, std::vector<double> coords) {
    if (n < 1 || dim < 1) throw InvalidInputError("empty point set");
    if (coords.size() != static_cast<std::size_t>(n) * dim)
      throw InvalidInputError("coordinate array has wrong size");
    for (double v : coords)
      if (!std::isfinite(v))
        throw InvalidInputError("point coordinates must be finite");
    PointSet p;
    p.n_ = n;
    p.dim_ = dim;
    p.coords_ = std::move(coords);
    return p;
  }

  // Validates symmetry to `sym_tol`, then symmetrizes; the diagonal must
  // be zero to the same tolerance and is zeroed.
  static PointSet from_distances(int n, std::vector<double> dist,
                                 double sym_tol = 1e-9) {
    if (n < 1) throw InvalidInputError("empty point set");
    if (dist.size() != static_cast<std::size_t>(n) * n)
      throw InvalidInputError("distance matrix has wrong size");
    for (int i = 0; i < n; ++i) {
      double d = dist[static_cast<std::size_t>(i) * n + i];
      if (!std::isfinite(d) || std::abs(d) > sym_tol)
        throw InvalidInputError("distance matrix diagonal not zero at row " +
                                std::to_string(i + 1));
      dist[static_cast<std::size_t>(i) * n + i] = 0.0;
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double& upper = dist[static_cast<std::size_t>(i) * n + j];
        double& lower = dist[static_cast<std::size_t>(j) * n + i];
        if (!std::isfinite(upper) || !std::isfinite(lower) ||
            std::abs(upper - lower) > sym_tol)
          throw InvalidInputError("distance matrix asymmetric at (" +
                                  std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ")");
        if (upper < 0.0 || lower < 0.0)
          throw InvalidInputError("distances must be nonnegative");
        upper = lower = 0.5 * (upper + lower);
      }
    PointSet p;
    p.n_ = n;
    p.dist_ = std::move(dist);
    return p;
  }

  int size() const { return n_; }
  bool euclidean() const { return !coords_.empty(); }
  int dim() const { return dim_; }

  const double* row(int i) const { return coords_.data() + static_cast<std::size_t>(i) * dim_; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& distance_matrix() const { return dist_; }

  double squared_distance(int i, int j) const {
    if (euclidean()) {
      const double* a = row(i);
      const double* b = row(j);
      double s = 0.0;
      for (int t = 0; t < dim_; ++t) {
        double diff = a[t] - b[t];
        s += diff * diff;
      }
      return s;
    }
    double d = dist_[static_cast<std::size_t>(i) * n_ + j];
    return d * d;
  }

  double distance(int i, int j) const {
    if (euclidean()) return std::sqrt(squared_distance(i, j));
    return dist_[static_cast<std::size_t>(i) * n_ + j];
  }

 private:
  PointSet() = default;
  int n_ = 0;
  int dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> dist_;
};

}  // namespace kmd
