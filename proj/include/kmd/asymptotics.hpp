#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kmd/error.hpp"
#include "kmd/graph.hpp"
#include "kmd/kernel.hpp"
#include "kmd/point_set.hpp"
#include "kmd/rng.hpp"

namespace kmd {

struct AbcLimits {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// Limiting kernel moments: a = sum pi_i pi_j K^2(i,j),
// b = sum pi_i pi_j pi_l K(i,j) K(i,l), c = (sum pi_i pi_j K(i,j))^2.
inline AbcLimits abc_limits(const LabelKernel& kernel,
                            const std::vector<double>& pi) {
  int m = kernel.classes();
  if (static_cast<int>(pi.size()) != m)
    throw InvalidInputError("pi length does not match kernel dimension");
  double pi_sum = 0.0;
  for (double w : pi) {
    if (!(w > 0.0)) throw InvalidInputError("proportions must be positive");
    pi_sum += w;
  }
  if (std::abs(pi_sum - 1.0) > 1e-12)
    throw InvalidInputError("proportions must sum to 1");

  AbcLimits out;
  double mean = 0.0;
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      out.a += pi[i] * pi[j] * kernel(i, j) * kernel(i, j);
      row += pi[j] * kernel(i, j);
    }
    out.b += pi[i] * row * row;
    mean += pi[i] * row;
  }
  out.c = mean * mean;
  return out;
}

// Distribution-free null constants for a graph family at (k, d), with
// Monte-Carlo standard errors.
struct NullConstants {
  GraphKind kind = GraphKind::knn_directed;
  int k = 1;
  int d = 1;
  double g1 = 0.0, g2 = 0.0, g3 = 0.0;
  double se1 = 0.0, se2 = 0.0, se3 = 0.0;
  long reps = 0;
  long resampled = 0;  // replicates redrawn because the window was empty
  double window_volume = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double unit_ball_volume(int d) {
  return std::pow(std::acos(-1.0), d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

// Cube volume whose inscribed radius is a multiple of the typical k-NN
// distance of a unit-rate process; generous in low dimension where the
// stabilization radius spans many spacings.
inline double default_window_volume(int k, int d) {
  double rho = std::max(3.0, 24.0 / d);
  double volume = std::pow(2.0 * rho, d) * k / unit_ball_volume(d);
  return std::min(std::max(volume, 32.0), 1e6);
}

}  // namespace detail

// Per replicate: a homogeneous rate-1 Poisson process on a centered
// d-cube plus the origin; the graph is built on the window and the three
// degree functionals are read off at the origin. g2 aggregates as
// (ordered in-neighbor pairs) + g1.
inline NullConstants mc_null_constants(GraphKind kind, int k, int d,
                                       double window_volume, long reps,
                                       std::uint64_t seed, int threads = 0) {
  if (d < 1) throw InvalidInputError("dimension must be positive");
  if (reps < 1) throw InvalidInputError("need at least one replicate");
  if (kind != GraphKind::mst && k < 1)
    throw InvalidInputError("k must be positive");
  double volume = window_volume > 0.0
                      ? window_volume
                      : detail::default_window_volume(std::max(k, 1), d);
  double side = std::pow(volume, 1.0 / d);

  std::vector<double> f1(reps), f2(reps), f3(reps);
  std::vector<unsigned char> redrawn(reps, 0);
  int min_points = kind == GraphKind::mst ? 1 : k;

  exec::parallel_for(
      reps,
      [&](std::size_t r) {
        for (std::uint64_t attempt = 0;; ++attempt) {
          auto gen = rng::engine(seed, 0x706f6973ULL, r, attempt);
          std::poisson_distribution<int> count(volume);
          int points = count(gen);
          if (points < min_points) {
            redrawn[r] = 1;
            continue;  // graph undefined without neighbors
          }
          int n = points + 1;
          std::vector<double> coords(static_cast<std::size_t>(n) * d, 0.0);
          std::uniform_real_distribution<double> unif(-0.5 * side, 0.5 * side);
          for (int i = 1; i < n; ++i)
            for (int t = 0; t < d; ++t)
              coords[static_cast<std::size_t>(i) * d + t] = unif(gen);
          auto pts = PointSet::from_points(n, d, std::move(coords));
          auto graph = kind == GraphKind::mst
                           ? build_mst(pts)
                           : build_knn(pts, k,
                                       kind == GraphKind::knn_directed,
                                       rng::stream(seed, 0x74696573ULL, r),
                                       1);
          double d0 = graph.out_degree(0);
          f1[r] = 1.0 / d0;
          double in_sum = 0.0, in_sum_sq = 0.0, mutual = 0.0;
          for (int i = 1; i < n; ++i) {
            if (!graph.has_arc(i, 0)) continue;
            double inv = 1.0 / graph.out_degree(i);
            in_sum += inv;
            in_sum_sq += inv * inv;
            if (graph.has_arc(0, i)) mutual += inv / d0;
          }
          f2[r] = in_sum * in_sum - in_sum_sq;
          f3[r] = mutual;
          break;
        }
      },
      threads);

  NullConstants out;
  out.kind = kind;
  out.k = k;
  out.d = d;
  out.reps = reps;
  out.window_volume = volume;
  out.seed = seed;
  for (unsigned char r : redrawn) out.resampled += r;

  auto mean_se = [reps](const std::vector<double>& xs, double& mean,
                        double& se) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    mean = sum / reps;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = reps > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0;
  };
  double mean1, mean3;
  mean_se(f1, mean1, out.se1);
  mean_se(f3, mean3, out.se3);
  out.g1 = mean1;
  out.g3 = mean3;
  // g2 = E[in-pair functional] + g1; the SE tracks the summed replicate.
  std::vector<double> g2_rep(reps);
  for (long r = 0; r < reps; ++r) g2_rep[r] = f1[r] + f2[r];
  double mean2;
  mean_se(g2_rep, mean2, out.se2);
  out.g2 = mean2;
  return out;
}

// Asymptotic null variance of sqrt(n) * eta_hat:
// [a(g1+g3) + b(g2-2g1-2g3-1) + c(g1-g2+g3+1)] / denominator^2.
inline double sigma_sq(const NullConstants& constants,
                       const LabelKernel& kernel,
                       const std::vector<double>& pi) {
  auto abc = abc_limits(kernel, pi);
  int m = kernel.classes();
  double diag = 0.0, cross = 0.0;
  for (int i = 0; i < m; ++i) {
    diag += pi[i] * kernel(i, i);
    for (int j = 0; j < m; ++j) cross += pi[i] * pi[j] * kernel(i, j);
  }
  double denom = diag - cross;
  if (!(denom > 0.0))
    throw DegenerateStatisticError(
        "kernel is not characteristic for these proportions");
  double numerator =
      abc.a * (constants.g1 + constants.g3) +
      abc.b * (constants.g2 - 2.0 * constants.g1 - 2.0 * constants.g3 - 1.0) +
      abc.c * (constants.g1 - constants.g2 + constants.g3 + 1.0);
  if (!(numerator > 0.0))
    throw InternalError("nonpositive limiting variance; check the g inputs");
  return numerator / (denom * denom);
}

struct ConvergenceRow {
  int n = 0;
  double mean_g1 = 0.0;
  double mean_g2 = 0.0;
  double mean_g3 = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  NullConstants reference;  // Monte-Carlo limits for the same (kind, k, d)
};

// Sample-level graph functionals on standard Gaussian null data versus
// their Poisson-process limits.
inline ConvergenceTable compare_gtilde_convergence(
    int d, int k, const std::vector<int>& n_grid, int reps,
    std::uint64_t seed, long mc_reps = 100000, int threads = 0,
    double mc_window_volume = 0.0) {
  ConvergenceTable table;
  table.reference =
      mc_null_constants(GraphKind::knn_directed, k, d, mc_window_volume,
                        mc_reps, rng::stream(seed, 1), threads);
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    int n = n_grid[gi];
    std::vector<GraphStats> stats(reps);
    exec::parallel_for(
        reps,
        [&](std::size_t r) {
          auto gen = rng::engine(seed, 2, gi, r);
          std::normal_distribution<double> normal;
          std::vector<double> coords(static_cast<std::size_t>(n) * d);
          for (auto& c : coords) c = normal(gen);
          auto graph = build_knn(PointSet::from_points(n, d, std::move(coords)),
                                 k, true, rng::stream(seed, 3, gi, r), 1);
          stats[r] = graph_stats(graph);
        },
        threads);
    ConvergenceRow row;
    row.n = n;
    for (const auto& s : stats) {
      row.mean_g1 += s.g1;
      row.mean_g2 += s.g2;
      row.mean_g3 += s.g3;
    }
    row.mean_g1 /= reps;
    row.mean_g2 /= reps;
    row.mean_g3 /= reps;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace kmd
