#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kmd/error.hpp"
#include "kmd/kernel.hpp"
#include "kmd/quadrature.hpp"

namespace kmd {

// Joint model on a finite observation space {1,...,s}: one probability
// vector per class plus mixing proportions. Population oracles evaluate
// the dissimilarity exactly on such models.
struct FiniteJointModel {
  std::vector<std::vector<double>> p;  // per-class pmf over support points
  std::vector<double> pi;              // mixing proportions

  int classes() const { return static_cast<int>(p.size()); }
  int support() const { return p.empty() ? 0 : static_cast<int>(p[0].size()); }

  void validate() const {
    if (classes() < 2) throw InvalidInputError("need at least two classes");
    if (static_cast<int>(pi.size()) != classes())
      throw InvalidInputError("pi length does not match class count");
    double pi_sum = 0.0;
    for (double w : pi) {
      if (!(w > 0.0)) throw InvalidInputError("proportions must be positive");
      pi_sum += w;
    }
    if (std::abs(pi_sum - 1.0) > 1e-12)
      throw InvalidInputError("proportions must sum to 1");
    for (const auto& row : p) {
      if (static_cast<int>(row.size()) != support())
        throw InvalidInputError("ragged probability table");
      double sum = 0.0;
      for (double v : row) {
        if (v < 0.0) throw InvalidInputError("negative probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidInputError("class distribution must sum to 1");
    }
  }
};

// Exact population dissimilarity on a finite space, by direct summation
// of the Radon-Nikodym form with derivatives replaced by ratios of point
// masses. Support points with zero pooled mass contribute zero.
inline double eta_exact_finite(const FiniteJointModel& model,
                               const LabelKernel& kernel) {
  model.validate();
  int m = model.classes();
  if (kernel.classes() != m)
    throw InvalidInputError("kernel dimension does not match class count");

  double cross = 0.0;  // sum_{ij} pi_i pi_j K(i,j)
  double diag = 0.0;   // sum_i pi_i K(i,i)
  for (int i = 0; i < m; ++i) {
    diag += model.pi[i] * kernel(i, i);
    for (int j = 0; j < m; ++j)
      cross += model.pi[i] * model.pi[j] * kernel(i, j);
  }

  double joint = 0.0;
  for (int z = 0; z < model.support(); ++z) {
    double pooled = 0.0;
    for (int i = 0; i < m; ++i) pooled += model.pi[i] * model.p[i][z];
    if (pooled <= 0.0) continue;
    double cell = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        cell += model.pi[i] * model.p[i][z] * model.pi[j] * model.p[j][z] *
                kernel(i, j);
    joint += cell / pooled;
  }

  double denom = diag - cross;
  if (!(denom > 0.0))
    throw DegenerateStatisticError("kernel denominator vanishes");
  return (joint - cross) / denom;
}

// One-dimensional density with an explicit integration domain.
struct Density1D {
  std::function<double(double)> pdf;
  double lo = 0.0;
  double hi = 1.0;

  double mass() const {
    return adaptive_simpson(pdf, lo, hi, 1e-10);
  }
};

inline Density1D uniform_density(double lo, double hi) {
  double len = hi - lo;
  return {[lo, hi, len](double x) {
            return (x >= lo && x <= hi) ? 1.0 / len : 0.0;
          },
          lo, hi};
}

// Domain truncated at 10 standard deviations; the tail mass lost is far
// below the quadrature target.
inline Density1D gaussian_density(double mean, double sd) {
  double inv = 1.0 / (sd * std::sqrt(2.0 * std::acos(-1.0)));
  return {[mean, sd, inv](double x) {
            double t = (x - mean) / sd;
            return inv * std::exp(-0.5 * t * t);
          },
          mean - 10.0 * sd, mean + 10.0 * sd};
}

// Two-sample closed form eta = 1 - int f g / (pi1 f + pi2 g). The
// integrand vanishes wherever either density does, so integration runs
// over the overlap of the two domains, split at the domain endpoints to
// keep piecewise densities exact.
inline double eta_two_sample_1d(const Density1D& f, const Density1D& g,
                                double pi1, double tol = 1e-9) {
  if (!(pi1 > 0.0 && pi1 < 1.0))
    throw InvalidInputError("pi1 must lie strictly between 0 and 1");
  if (std::abs(f.mass() - 1.0) > 1e-6 || std::abs(g.mass() - 1.0) > 1e-6)
    throw InvalidInputError("densities must integrate to 1");
  double pi2 = 1.0 - pi1;
  double lo = std::max(f.lo, g.lo);
  double hi = std::min(f.hi, g.hi);
  if (!(hi > lo)) return 1.0;  // disjoint supports

  auto integrand = [&](double x) {
    double fv = f.pdf(x), gv = g.pdf(x);
    double mix = pi1 * fv + pi2 * gv;
    if (mix <= 0.0) return 0.0;
    return fv * gv / mix;
  };
  return 1.0 - adaptive_simpson(integrand, lo, hi, tol);
}

// eta along the Gaussian location family N(0,1) vs N(lambda,1); strictly
// increasing in lambda, from 0 toward 1.
inline std::vector<double> eta_gaussian_location_curve(
    const std::vector<double>& lambdas, double pi1) {
  std::vector<double> out;
  out.reserve(lambdas.size());
  for (double lam : lambdas) {
    if (lam < 0.0) throw InvalidInputError("lambda must be nonnegative");
    out.push_back(eta_two_sample_1d(gaussian_density(0.0, 1.0),
                                    gaussian_density(lam, 1.0), pi1));
  }
  return out;
}

// Pushes the model through a row-stochastic channel and evaluates the
// dissimilarity before and after. Processing can only decrease it;
// deterministic bijections leave it unchanged.
inline std::pair<double, double> verify_dpi_finite(
    const FiniteJointModel& model, const std::vector<std::vector<double>>& channel,
    const LabelKernel& kernel) {
  model.validate();
  if (static_cast<int>(channel.size()) != model.support())
    throw InvalidInputError("channel rows do not match support size");
  int out_support = channel.empty() ? 0 : static_cast<int>(channel[0].size());
  for (const auto& row : channel) {
    if (static_cast<int>(row.size()) != out_support)
      throw InvalidInputError("ragged channel matrix");
    double sum = 0.0;
    for (double v : row) {
      if (v < -1e-15) throw InvalidInputError("negative channel entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw InvalidInputError("channel rows must sum to 1");
  }

  FiniteJointModel pushed;
  pushed.pi = model.pi;
  pushed.p.assign(model.classes(), std::vector<double>(out_support, 0.0));
  for (int i = 0; i < model.classes(); ++i)
    for (int z = 0; z < model.support(); ++z)
      for (int w = 0; w < out_support; ++w)
        pushed.p[i][w] += model.p[i][z] * channel[z][w];
  // Renormalize away accumulation noise so validation stays strict.
  for (auto& row : pushed.p) {
    double sum = 0.0;
    for (double v : row) sum += v;
    for (auto& v : row) v /= sum;
  }
  return {eta_exact_finite(model, kernel), eta_exact_finite(pushed, kernel)};
}

// Mixes two models class-by-class and checks joint convexity:
// eta(lambda P + (1-lambda) Q) <= lambda eta(P) + (1-lambda) eta(Q).
inline bool verify_convexity_finite(const FiniteJointModel& p,
                                    const FiniteJointModel& q, double lambda,
                                    const LabelKernel& kernel,
                                    double tol = 1e-12) {
  p.validate();
  q.validate();
  if (lambda < 0.0 || lambda > 1.0)
    throw InvalidInputError("lambda must lie in [0,1]");
  if (p.classes() != q.classes() || p.support() != q.support())
    throw InvalidInputError("models must share support and class count");
  for (int i = 0; i < p.classes(); ++i)
    if (std::abs(p.pi[i] - q.pi[i]) > 1e-12)
      throw InvalidInputError("models must share mixing proportions");

  FiniteJointModel mix;
  mix.pi = p.pi;
  mix.p.assign(p.classes(), std::vector<double>(p.support(), 0.0));
  for (int i = 0; i < p.classes(); ++i)
    for (int z = 0; z < p.support(); ++z)
      mix.p[i][z] = lambda * p.p[i][z] + (1.0 - lambda) * q.p[i][z];

  double eta_mix = eta_exact_finite(mix, kernel);
  double bound = lambda * eta_exact_finite(p, kernel) +
                 (1.0 - lambda) * eta_exact_finite(q, kernel);
  return eta_mix <= bound + tol;
}

}  // namespace kmd
