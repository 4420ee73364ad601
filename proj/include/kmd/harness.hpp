#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kmd/error.hpp"
#include "kmd/estimator.hpp"
#include "kmd/rng.hpp"

namespace kmd {

enum class Scenario {
  normal_location,
  normal_scale,
  t_location,
  u_shape_scale,
  s_shape_rotation,
  spherical,
  uniform_shift,
  gaussian_scale_threshold,
};

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::normal_location: return "normal-location";
    case Scenario::normal_scale: return "normal-scale";
    case Scenario::t_location: return "t-location";
    case Scenario::u_shape_scale: return "u-shape-scale";
    case Scenario::s_shape_rotation: return "s-shape-rotation";
    case Scenario::spherical: return "spherical";
    case Scenario::uniform_shift: return "uniform-shift";
    case Scenario::gaussian_scale_threshold: return "gaussian-scale-threshold";
  }
  return "?";
}

inline Scenario scenario_from_string(const std::string& name) {
  for (Scenario s :
       {Scenario::normal_location, Scenario::normal_scale,
        Scenario::t_location, Scenario::u_shape_scale,
        Scenario::s_shape_rotation, Scenario::spherical,
        Scenario::uniform_shift, Scenario::gaussian_scale_threshold}) {
    if (name == to_string(s)) return s;
  }
  throw InvalidInputError("unknown scenario: " + name);
}

// One synthetic sampling configuration. `param` is the scenario's moving
// parameter: the location step for normal-location, the variance step for
// normal-scale, the noncentrality for t-location, the scale for the
// U-shape, the rotation angle for the S-shape, the radial exponent for
// the spherical family, the offset for uniform-shift, and the exponent b
// for the scale-threshold family.
struct ScenarioSpec {
  Scenario id = Scenario::normal_location;
  int d = 2;
  double param = 0.0;
  std::vector<int> sizes;  // per-class sample sizes
  std::uint64_t seed = kDefaultSeed;

  int total() const {
    int n = 0;
    for (int s : sizes) n += s;
    return n;
  }
};

namespace detail {

struct Chol2 {
  double l00, l10, l11;
};

inline Chol2 cholesky2(double a, double b, double c) {
  double l00 = std::sqrt(a);
  double l10 = b / l00;
  return {l00, l10, std::sqrt(c - l10 * l10)};
}

struct MixtureComponent {
  double mx, my;
  Chol2 chol;
};

inline void sample_mixture2d(std::mt19937_64& gen,
                             const std::vector<MixtureComponent>& comps,
                             const std::vector<double>& weights, double* out) {
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  const auto& c = comps[pick(gen)];
  double z0 = normal(gen), z1 = normal(gen);
  out[0] = c.mx + c.chol.l00 * z0;
  out[1] = c.my + c.chol.l10 * z0 + c.chol.l11 * z1;
}

// U-shaped mixture: weights 1/2, 1/4, 1/4.
inline const std::vector<MixtureComponent>& u_shape_components() {
  static const std::vector<MixtureComponent> comps = {
      {0.0, 0.0, cholesky2(2.0, 0.0, 0.125)},
      {-3.0, 1.0, cholesky2(0.5, -1.0 / 3, 0.5)},
      {3.0, 1.0, cholesky2(0.5, 1.0 / 3, 0.5)},
  };
  return comps;
}

// S-shaped mixture: equal weights.
inline const std::vector<MixtureComponent>& s_shape_components() {
  static const double r = std::sqrt(3.0 / 8);
  static const std::vector<MixtureComponent> comps = {
      {-4.5, -0.5, cholesky2(1.5, -r, 1.0)},
      {0.0, -0.5, cholesky2(1.5, r, 1.0)},
      {4.5, 1.0, cholesky2(1.5, -r, 1.0)},
  };
  return comps;
}

inline double sample_beta(std::mt19937_64& gen, double alpha, double beta) {
  std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
  double x = ga(gen), y = gb(gen);
  return x / (x + y);
}

// Noncentral t with nu degrees of freedom: (Z + delta) / sqrt(V / nu).
inline double sample_noncentral_t(std::mt19937_64& gen, double nu,
                                  double delta) {
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi(nu);
  return (normal(gen) + delta) / std::sqrt(chi(gen) / nu);
}

inline void sample_sphere_direction(std::mt19937_64& gen, int d, double* out) {
  std::normal_distribution<double> normal;
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int t = 0; t < d; ++t) {
      out[t] = normal(gen);
      norm += out[t] * out[t];
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (int t = 0; t < d; ++t) out[t] /= norm;
}

}  // namespace detail

inline std::vector<int> default_sizes(Scenario id, int per_class = 100) {
  int m = id == Scenario::uniform_shift ||
                  id == Scenario::gaussian_scale_threshold
              ? 2
              : 3;
  return std::vector<int>(m, per_class);
}

// Draws a labeled dataset per the scenario definition. Deterministic in
// (spec, spec.seed).
inline LabeledDataset generate(const ScenarioSpec& spec) {
  std::vector<int> sizes =
      spec.sizes.empty() ? default_sizes(spec.id) : spec.sizes;
  int m = static_cast<int>(sizes.size());
  int n = 0;
  for (int s : sizes) {
    if (s < 1) throw InvalidInputError("class sizes must be positive");
    n += s;
  }
  int d = spec.d;
  if (spec.id == Scenario::u_shape_scale ||
      spec.id == Scenario::s_shape_rotation)
    d = 2;
  if (spec.id == Scenario::t_location && spec.d <= 0) d = 16;
  if (d < 1) throw InvalidInputError("dimension must be positive");

  std::vector<double> coords(static_cast<std::size_t>(n) * d);
  std::vector<int> labels(n);
  auto gen = rng::engine(spec.seed, static_cast<std::uint64_t>(spec.id));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif01(0.0, 1.0);

  int row = 0;
  for (int cls = 0; cls < m; ++cls) {
    for (int s = 0; s < sizes[cls]; ++s, ++row) {
      labels[row] = cls;
      double* x = coords.data() + static_cast<std::size_t>(row) * d;
      switch (spec.id) {
        case Scenario::normal_location: {
          double shift = cls * spec.param;
          for (int t = 0; t < d; ++t) x[t] = normal(gen) + shift;
          break;
        }
        case Scenario::normal_scale: {
          double sd = std::sqrt(1.0 + cls * spec.param);
          for (int t = 0; t < d; ++t) x[t] = sd * normal(gen);
          break;
        }
        case Scenario::t_location: {
          double delta = cls == 0 ? spec.param : 0.0;
          for (int t = 0; t < d; ++t)
            x[t] = detail::sample_noncentral_t(gen, 1.0, delta);
          break;
        }
        case Scenario::u_shape_scale: {
          detail::sample_mixture2d(gen, detail::u_shape_components(),
                                   {0.5, 0.25, 0.25}, x);
          if (cls == 2)
            for (int t = 0; t < 2; ++t) x[t] *= spec.param;
          break;
        }
        case Scenario::s_shape_rotation: {
          detail::sample_mixture2d(gen, detail::s_shape_components(),
                                   {1.0 / 3, 1.0 / 3, 1.0 / 3}, x);
          if (cls == 2) {
            double c = std::cos(spec.param), s0 = std::sin(spec.param);
            double x0 = x[0], x1 = x[1];
            x[0] = c * x0 + s0 * x1;
            x[1] = -s0 * x0 + c * x1;
          }
          break;
        }
        case Scenario::spherical: {
          double radius;
          if (cls == 0) {
            radius = unif01(gen);
          } else if (cls == 1) {
            radius = detail::sample_beta(gen, 1.0 - spec.param,
                                         1.0 + spec.param);
          } else {
            radius = detail::sample_beta(gen, 1.0 + spec.param,
                                         1.0 - spec.param);
          }
          detail::sample_sphere_direction(gen, d, x);
          for (int t = 0; t < d; ++t) x[t] *= radius;
          break;
        }
        case Scenario::uniform_shift: {
          for (int t = 0; t < d; ++t) x[t] = unif01(gen);
          if (cls == 1) x[0] += spec.param;
          break;
        }
        case Scenario::gaussian_scale_threshold: {
          double sd = cls == 0 ? 3.0 : 3.0 + 2.0 * std::pow(n, spec.param);
          for (int t = 0; t < d; ++t) x[t] = sd * normal(gen);
          break;
        }
      }
    }
  }
  return LabeledDataset(PointSet::from_points(n, d, std::move(coords)),
                        std::move(labels), m);
}

// ---- study drivers ----

struct PowerRow {
  double param = 0.0;
  double power = 0.0;
  int reps = 0;
};

struct PowerStudy {
  Scenario scenario;
  int d = 0;
  std::vector<int> sizes;
  double alpha = 0.05;
  std::vector<PowerRow> rows;
};

// Empirical rejection rate of the permutation test (or the asymptotic
// test when config.permutations == 0) over `reps` replications per grid
// point. Cell/replicate seeds derive from (seed, cell, rep).
inline PowerStudy run_power_study(Scenario id, const std::vector<double>& grid,
                                  int d, const std::vector<int>& sizes,
                                  const TestConfig& config, int reps,
                                  double alpha, std::uint64_t seed) {
  if (reps < 1) throw InvalidInputError("need at least one replication");
  PowerStudy study;
  study.scenario = id;
  study.d = d;
  study.sizes = sizes;
  study.alpha = alpha;
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    std::vector<unsigned char> reject(reps, 0);
    exec::parallel_for(
        reps,
        [&](std::size_t rep) {
          ScenarioSpec spec{id, d, grid[cell], sizes,
                            rng::stream(seed, cell, rep)};
          auto data = generate(spec);
          TestConfig local = config;
          local.seed = rng::stream(seed, cell, rep, 1);
          local.threads = 1;
          auto report = kmd_test(data, local);
          double p = config.permutations > 0 ? *report.p_permutation
                                             : report.p_asymptotic;
          reject[rep] = p < alpha ? 1 : 0;
        },
        config.threads);
    PowerRow row;
    row.param = grid[cell];
    row.reps = reps;
    for (unsigned char r : reject) row.power += r;
    row.power /= reps;
    study.rows.push_back(row);
  }
  return study;
}

struct ThresholdRow {
  double b = 0.0;
  int k = 0;
  double power = 0.0;
};

struct ThresholdStudy {
  int d = 0;
  int n_total = 0;
  double pi1 = 0.0;
  double alpha = 0.05;
  int reps = 0;
  std::vector<ThresholdRow> rows;
};

// Scale-threshold sweep: n1 = pi1 n vs n2 = (1-pi1) n draws from the
// inflating-variance family, asymptotic test, power as a function of the
// shrink exponent b.
inline ThresholdStudy run_threshold_sweep(int d, int n_total, double pi1,
                                          const std::vector<double>& b_grid,
                                          const std::vector<int>& k_list,
                                          int reps, double alpha,
                                          std::uint64_t seed,
                                          int threads = 0) {
  if (!(pi1 > 0.0 && pi1 < 1.0))
    throw InvalidInputError("pi1 must lie strictly between 0 and 1");
  for (double b : b_grid)
    if (b <= -1.0 || b >= 0.0)
      throw InvalidInputError("b must lie in (-1, 0)");
  int n1 = static_cast<int>(std::lround(pi1 * n_total));
  std::vector<int> sizes = {n1, n_total - n1};

  ThresholdStudy study;
  study.d = d;
  study.n_total = n_total;
  study.pi1 = pi1;
  study.alpha = alpha;
  study.reps = reps;
  for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
    for (std::size_t bi = 0; bi < b_grid.size(); ++bi) {
      std::vector<unsigned char> reject(reps, 0);
      exec::parallel_for(
          reps,
          [&](std::size_t rep) {
            ScenarioSpec spec{Scenario::gaussian_scale_threshold, d,
                              b_grid[bi], sizes,
                              rng::stream(seed, ki, bi, rep)};
            auto data = generate(spec);
            TestConfig config;
            config.k = k_list[ki];
            config.permutations = 0;
            config.seed = rng::stream(seed, ki, bi, rep, 1);
            config.threads = 1;
            auto report = kmd_test(data, config);
            reject[rep] = report.p_asymptotic < alpha ? 1 : 0;
          },
          threads);
      ThresholdRow row;
      row.b = b_grid[bi];
      row.k = k_list[ki];
      for (unsigned char r : reject) row.power += r;
      row.power /= reps;
      study.rows.push_back(row);
    }
  }
  return study;
}

struct KStudyRow {
  int k = 0;
  double mean_eta = 0.0;
  double mse = 0.0;
};

struct KStudy {
  double eta_true = 0.0;
  int reps = 0;
  std::vector<KStudyRow> rows;
};

// Mean and mean squared error of the estimate across the k grid, for a
// scenario with known population value.
inline KStudy run_k_study(const ScenarioSpec& base, double eta_true,
                          const std::vector<int>& k_grid, int reps,
                          std::uint64_t seed, int threads = 0) {
  KStudy study;
  study.eta_true = eta_true;
  study.reps = reps;
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    std::vector<double> etas(reps);
    exec::parallel_for(
        reps,
        [&](std::size_t rep) {
          ScenarioSpec spec = base;
          spec.seed = rng::stream(seed, ki, rep);
          auto data = generate(spec);
          auto graph = build_knn(data.points(), k_grid[ki], true,
                                 rng::stream(seed, ki, rep, 1), 1);
          etas[rep] = eta_hat(graph, data.labels(),
                              LabelKernel::discrete(data.classes()))
                          .eta;
        },
        threads);
    KStudyRow row;
    row.k = k_grid[ki];
    for (double e : etas) {
      row.mean_eta += e;
      row.mse += (e - eta_true) * (e - eta_true);
    }
    row.mean_eta /= reps;
    row.mse /= reps;
    study.rows.push_back(row);
  }
  return study;
}

struct NullCltRow {
  int per_class = 0;
  double ks_distance = 0.0;
  double mean_z = 0.0;
  double sd_z = 0.0;
  double rejection_rate = 0.0;
  std::vector<double> z_scores;
};

inline double ks_distance_to_standard_normal(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double cdf = normal_cdf(z[i]);
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return d;
}

// z-scores of the exact-variance statistic over null replications
// (M = 3 identical standard Gaussians), with per-row KS distance to the
// standard normal and the rejection rate at `alpha`.
inline std::vector<NullCltRow> run_null_clt(const std::vector<int>& ni_grid,
                                            int d, int reps, int k,
                                            double alpha, std::uint64_t seed,
                                            int threads = 0) {
  if (reps < 100) throw InvalidInputError("need at least 100 replications");
  std::vector<NullCltRow> rows;
  for (std::size_t gi = 0; gi < ni_grid.size(); ++gi) {
    int per_class = ni_grid[gi];
    std::vector<int> sizes(3, per_class);
    std::vector<double> z(reps);
    exec::parallel_for(
        reps,
        [&](std::size_t rep) {
          ScenarioSpec spec{Scenario::normal_location, d, 0.0, sizes,
                            rng::stream(seed, gi, rep)};
          auto data = generate(spec);
          TestConfig config;
          config.k = k;
          config.permutations = 0;
          config.seed = rng::stream(seed, gi, rep, 1);
          config.threads = 1;
          z[rep] = kmd_test(data, config).z;
        },
        threads);
    NullCltRow row;
    row.per_class = per_class;
    for (double v : z) row.mean_z += v;
    row.mean_z /= reps;
    for (double v : z) {
      row.sd_z += (v - row.mean_z) * (v - row.mean_z);
      if (1.0 - normal_cdf(v) < alpha) row.rejection_rate += 1.0;
    }
    row.sd_z = std::sqrt(row.sd_z / (reps - 1.0));
    row.rejection_rate /= reps;
    row.ks_distance = ks_distance_to_standard_normal(z);
    row.z_scores = std::move(z);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kmd
