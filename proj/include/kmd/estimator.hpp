#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmd/error.hpp"
#include "kmd/graph.hpp"
#include "kmd/kernel.hpp"
#include "kmd/point_set.hpp"
#include "kmd/rng.hpp"

namespace kmd {

// Pooled observations with class labels in {0,...,m-1}. Every class must
// appear at least once.
class LabeledDataset {
 public:
  LabeledDataset(PointSet points, std::vector<int> labels, int m)
      : points_(std::move(points)), labels_(std::move(labels)), m_(m) {
    if (static_cast<int>(labels_.size()) != points_.size())
      throw InvalidInputError("label count does not match point count");
    if (m_ < 1) throw InvalidInputError("need at least one class");
    counts_.assign(m_, 0);
    for (int lab : labels_) {
      if (lab < 0 || lab >= m_)
        throw InvalidInputError("label out of range");
      ++counts_[lab];
    }
    for (int i = 0; i < m_; ++i)
      if (counts_[i] == 0)
        throw InvalidInputError("class " + std::to_string(i + 1) +
                                " has no observations");
  }

  const PointSet& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }
  int classes() const { return m_; }
  const std::vector<int>& counts() const { return counts_; }
  int size() const { return points_.size(); }

  std::vector<double> proportions() const {
    std::vector<double> pi(m_);
    for (int i = 0; i < m_; ++i)
      pi[i] = static_cast<double>(counts_[i]) / size();
    return pi;
  }

 private:
  PointSet points_;
  std::vector<int> labels_;
  int m_;
  std::vector<int> counts_;
};

struct EtaEstimate {
  double eta = 0.0;
  double numerator = 0.0;    // graph_term - cross_term
  double denominator = 0.0;  // mean diagonal - cross_term
  double graph_term = 0.0;   // (1/n) sum_i (1/d_i) sum_{i->j} K
  double cross_term = 0.0;   // (1/(n(n-1))) sum_{i != j} K
};

namespace detail {

inline std::vector<int> class_counts(std::span<const int> labels, int m) {
  std::vector<int> counts(m, 0);
  for (int lab : labels) {
    if (lab < 0 || lab >= m)
      throw InvalidInputError("label out of range for kernel dimension");
    ++counts[lab];
  }
  return counts;
}

// Class-count identity for sum_{i != j} K(L_i, L_j); avoids the O(n^2)
// pass over pairs.
inline double pair_kernel_sum(const std::vector<int>& counts,
                              const LabelKernel& kernel) {
  int m = static_cast<int>(counts.size());
  double full = 0.0, diag = 0.0;
  for (int i = 0; i < m; ++i) {
    diag += static_cast<double>(counts[i]) * kernel(i, i);
    for (int j = 0; j < m; ++j)
      full += static_cast<double>(counts[i]) * counts[j] * kernel(i, j);
  }
  return full - diag;
}

inline double graph_term(const DirectedGeometricGraph& graph,
                         std::span<const int> labels,
                         const LabelKernel& kernel) {
  int n = graph.size();
  int d0 = graph.out_degree(0);
  bool uniform_degree = true;
  double raw = 0.0;       // sum of row sums
  double weighted = 0.0;  // sum of row sums scaled by 1/d_i
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j : graph.out_neighbors(i)) row += kernel(labels[i], labels[j]);
    raw += row;
    weighted += row / graph.out_degree(i);
    uniform_degree = uniform_degree && graph.out_degree(i) == d0;
  }
  // Constant out-degree (directed k-NN): divide once, so that integer
  // valued kernels stay exact; k = n-1 then gives eta_hat identically 0.
  if (uniform_degree) return raw / (static_cast<double>(n) * d0);
  return weighted / n;
}

}  // namespace detail

// Plug-in estimate of the dissimilarity. The graph term costs O(kn); the
// cross term comes from class counts in O(M^2).
inline EtaEstimate eta_hat(const DirectedGeometricGraph& graph,
                           std::span<const int> labels,
                           const LabelKernel& kernel) {
  int n = graph.size();
  if (static_cast<int>(labels.size()) != n)
    throw InvalidInputError("label count does not match graph size");
  auto counts = detail::class_counts(labels, kernel.classes());

  EtaEstimate est;
  est.graph_term = detail::graph_term(graph, labels, kernel);
  est.cross_term = detail::pair_kernel_sum(counts, kernel) /
                   (static_cast<double>(n) * (n - 1));
  double diag_mean = 0.0;
  for (int i = 0; i < kernel.classes(); ++i)
    diag_mean += static_cast<double>(counts[i]) * kernel(i, i);
  diag_mean /= n;

  est.numerator = est.graph_term - est.cross_term;
  est.denominator = diag_mean - est.cross_term;
  if (!(est.denominator > 1e-12 * std::max(kernel.max_abs_entry(), 1e-300)))
    throw DegenerateStatisticError(
        "denominator vanishes: need at least two classes present and a "
        "characteristic kernel");
  est.eta = est.numerator / est.denominator;
  return est;
}

// Label-kernel moment functionals over distinct index tuples, computed
// from class counts in O(M^2) via the closed forms (no pass over tuples).
struct AbcTilde {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline AbcTilde abc_tilde(const std::vector<int>& counts,
                          const LabelKernel& kernel) {
  int m = static_cast<int>(counts.size());
  if (m != kernel.classes())
    throw InvalidInputError("count vector does not match kernel dimension");
  double n = 0.0;
  for (int c : counts) n += c;
  if (n < 4)
    throw InvalidInputError("need n >= 4 observations for the variance");

  double sum_sq = 0.0;       // sum_{ij} n_i n_j K^2(i,j)
  double diag_sq = 0.0;      // sum_i n_i K^2(i,i)
  double sum_k = 0.0;        // sum_{ij} n_i n_j K(i,j)
  double diag_k = 0.0;       // sum_i n_i K(i,i)
  double diag_cross = 0.0;   // sum_{ij} K(i,i) K(i,j) n_i n_j
  std::vector<double> s(m, 0.0);  // s_i = sum_j K(i,j) n_j
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double nij = static_cast<double>(counts[i]) * counts[j];
      sum_sq += nij * kernel(i, j) * kernel(i, j);
      sum_k += nij * kernel(i, j);
      s[i] += kernel(i, j) * counts[j];
    }
    diag_sq += counts[i] * kernel(i, i) * kernel(i, i);
    diag_k += counts[i] * kernel(i, i);
    diag_cross += counts[i] * kernel(i, i) * s[i];
  }
  double triple = 0.0;  // n' [K] diag(n) [K] n = sum_i n_i s_i^2
  for (int i = 0; i < m; ++i) triple += counts[i] * s[i] * s[i];

  AbcTilde abc;
  abc.a = (sum_sq - diag_sq) / (n * (n - 1));
  abc.b = (triple + diag_sq - 2.0 * diag_cross - n * (n - 1) * abc.a) /
          (n * (n - 1) * (n - 2));
  double centered = sum_k - diag_k;
  abc.c = (centered * centered - 4.0 * n * (n - 1) * (n - 2) * abc.b -
           2.0 * n * (n - 1) * abc.a) /
          (n * (n - 1) * (n - 2) * (n - 3));
  return abc;
}

// Exact variance of eta_hat under uniformly random label permutation with
// the pooled sample fixed: Var(N_n)/(n * denominator^2) with
// Var(N_n) = a(g1 + g3 - 2/(n-1)) + b(g2 - 2 g1 - 2 g3 - 1 + 4/(n-1))
//          + c(g1 - g2 + g3 + (n-3)/(n-1)).
inline double perm_variance(const GraphStats& stats, const AbcTilde& abc,
                            int n, double denominator) {
  if (n < 4) throw InvalidInputError("need n >= 4 observations");
  double nm1 = n - 1.0;
  double var_nn =
      abc.a * (stats.g1 + stats.g3 - 2.0 / nm1) +
      abc.b * (stats.g2 - 2.0 * stats.g1 - 2.0 * stats.g3 - 1.0 + 4.0 / nm1) +
      abc.c * (stats.g1 - stats.g2 + stats.g3 + (n - 3.0) / nm1);
  double var = var_nn / (n * denominator * denominator);
  if (var < 0.0) {
    double scale = std::max(1.0, std::abs(abc.a) + std::abs(abc.b) +
                                     std::abs(abc.c));
    if (var_nn < -1e-12 * scale)
      throw InternalError("exact permutation variance came out negative: " +
                          std::to_string(var_nn));
    var = 0.0;  // floating-point guard on an exactly nonnegative quantity
  }
  return var;
}

struct AsymptoticTest {
  double z = 0.0;
  double p = 1.0;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// One-sided test: reject for large eta_hat.
inline AsymptoticTest asymptotic_test(double eta, double variance) {
  if (!(variance > 0.0))
    throw DegenerateStatisticError("permutation variance is zero");
  AsymptoticTest t;
  t.z = eta / std::sqrt(variance);
  t.p = 1.0 - normal_cdf(t.z);
  return t;
}

// Monte-Carlo permutation test. Only the graph term is recomputed under
// permuted labels; the denominator and cross term are invariant under
// label permutation. Replicates use per-index seed streams, so the result
// is deterministic and replicates could run in any order.
inline double permutation_test(const DirectedGeometricGraph& graph,
                               std::span<const int> labels,
                               const LabelKernel& kernel, int permutations,
                               std::uint64_t seed, int threads = 0) {
  if (permutations < 1)
    throw InvalidInputError("permutation count must be at least 1");
  double observed = detail::graph_term(graph, labels, kernel);
  std::vector<int> base(labels.begin(), labels.end());
  std::vector<double> replicated(permutations);
  exec::parallel_for(
      permutations,
      [&](std::size_t b) {
        auto gen = rng::engine(seed, 0x7065726dULL, b);
        std::vector<int> perm = base;
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
          std::uniform_int_distribution<std::size_t> pick(0, i);
          std::swap(perm[i], perm[pick(gen)]);
        }
        replicated[b] = detail::graph_term(graph, perm, kernel);
      },
      threads);
  long count = 0;
  for (double rep : replicated)
    if (rep >= observed) ++count;
  return (1.0 + count) / (1.0 + permutations);
}

struct TestConfig {
  GraphKind graph = GraphKind::knn_directed;
  int k = 0;  // 0 means the testing default round(0.1 n), floor 1
  std::optional<LabelKernel> kernel;  // default: discrete
  int permutations = 500;            // 0 disables the permutation test
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;
};

struct KmdReport {
  double eta = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  AbcTilde abc;
  GraphStats stats;
  double perm_variance = 0.0;
  double z = 0.0;
  double p_asymptotic = 1.0;
  std::optional<double> p_permutation;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  int n = 0;
  int classes = 0;
  std::vector<int> counts;
  GraphKind graph = GraphKind::knn_directed;
  int k = 0;
  int max_total_degree = 0;
  bool degree_bound_exceeded = false;
};

inline int default_test_k(int n) {
  return std::max(1, static_cast<int>(std::lround(0.1 * n)));
}

// Full pipeline: graph build, graph statistics, eta_hat, exact
// permutation variance, asymptotic and permutation p-values.
// Deterministic given (dataset, config).
inline KmdReport kmd_test(const LabeledDataset& dataset,
                          const TestConfig& config) {
  int n = dataset.size();
  const LabelKernel kernel = config.kernel.has_value()
                                 ? *config.kernel
                                 : LabelKernel::discrete(dataset.classes());
  if (kernel.classes() < dataset.classes())
    throw InvalidInputError("kernel dimension smaller than class count");

  int k = config.k > 0 ? config.k : default_test_k(n);
  DirectedGeometricGraph graph =
      config.graph == GraphKind::mst
          ? build_mst(dataset.points())
          : build_knn(dataset.points(), k,
                      config.graph == GraphKind::knn_directed, config.seed,
                      config.threads);

  KmdReport report;
  report.n = n;
  report.classes = dataset.classes();
  report.counts = dataset.counts();
  report.graph = config.graph;
  report.k = config.graph == GraphKind::mst ? 0 : k;
  report.seed = config.seed;

  auto est = eta_hat(graph, dataset.labels(), kernel);
  report.eta = est.eta;
  report.numerator = est.numerator;
  report.denominator = est.denominator;
  report.abc = abc_tilde(dataset.counts(), kernel);
  report.stats = graph_stats(graph);
  report.perm_variance =
      perm_variance(report.stats, report.abc, n, est.denominator);
  if (report.perm_variance > 0.0) {
    auto t = asymptotic_test(est.eta, report.perm_variance);
    report.z = t.z;
    report.p_asymptotic = t.p;
  } else {
    report.z = 0.0;
    report.p_asymptotic = 1.0;
  }
  if (config.permutations > 0) {
    report.p_permutation =
        permutation_test(graph, dataset.labels(), kernel,
                         config.permutations, config.seed, config.threads);
    report.n_permutations = config.permutations;
  }
  report.max_total_degree = graph.max_total_degree();
  if (config.graph != GraphKind::mst && dataset.points().euclidean()) {
    report.degree_bound_exceeded =
        report.max_total_degree > knn_degree_bound(k, dataset.points().dim());
  } else {
    // No usable degree bound for general metrics or the MST; flag
    // conspicuously large hubs instead.
    report.degree_bound_exceeded =
        report.max_total_degree >
        std::max(16, 4 * (config.graph == GraphKind::mst ? 1 : k));
  }
  return report;
}

}  // namespace kmd
