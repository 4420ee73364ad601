#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kmd/error.hpp"

namespace kmd {

// Symmetric positive semi-definite kernel on the label space {1,...,M}.
// Immutable after construction; safe to share across threads.
class LabelKernel {
 public:
  int classes() const { return m_; }
  double operator()(int i, int j) const { return k_[i * m_ + j]; }
  const std::vector<double>& matrix() const { return k_; }

  // True iff the quadratic form is strictly positive on the zero-sum
  // subspace {alpha : sum alpha_i = 0}.
  bool characteristic() const { return characteristic_; }

  double max_abs_entry() const { return max_abs_; }

  static LabelKernel discrete(int m);
  static LabelKernel weighted_discrete(const std::vector<double>& weights);
  static LabelKernel from_matrix(int m, std::vector<double> entries);

 private:
  LabelKernel(int m, std::vector<double> k);

  int m_ = 0;
  std::vector<double> k_;
  double max_abs_ = 0.0;
  bool characteristic_ = false;
};

namespace detail {

// Orthonormal basis of the zero-sum subspace of R^m (Helmert vectors):
// column j has j leading entries 1/sqrt(j(j+1)) and entry -j/sqrt(j(j+1)).
inline Eigen::MatrixXd zero_sum_basis(int m) {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m, m - 1);
  for (int j = 1; j < m; ++j) {
    double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) basis(i, j - 1) = 1.0 / norm;
    basis(j, j - 1) = -static_cast<double>(j) / norm;
  }
  return basis;
}

inline Eigen::MatrixXd to_eigen(int m, const std::vector<double>& k) {
  Eigen::MatrixXd mat(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) mat(i, j) = k[i * m + j];
  return mat;
}

}  // namespace detail

// Characteristic check on a raw matrix: projects K onto the (M-1)-dim
// zero-sum subspace and tests whether the smallest eigenvalue clears a
// scale-relative tolerance. Throws on asymmetric input.
inline bool validate_characteristic(int m, const std::vector<double>& entries,
                                    double sym_tol = 1e-12) {
  if (m < 2) throw InvalidInputError("kernel needs at least 2 classes");
  if (entries.size() != static_cast<std::size_t>(m) * m)
    throw InvalidInputError("kernel matrix has wrong size");
  double max_abs = 0.0;
  for (double v : entries) {
    if (!std::isfinite(v)) throw InvalidInputError("kernel entry not finite");
    max_abs = std::max(max_abs, std::abs(v));
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (std::abs(entries[i * m + j] - entries[j * m + i]) > sym_tol)
        throw InvalidInputError("kernel matrix is not symmetric at (" +
                                std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
  Eigen::MatrixXd k = detail::to_eigen(m, entries);
  k = 0.5 * (k + k.transpose().eval());
  Eigen::MatrixXd basis = detail::zero_sum_basis(m);
  Eigen::MatrixXd projected = basis.transpose() * k * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(projected);
  // Scale-relative threshold so rescaled kernels behave identically.
  double tol = 1e-10 * std::max(max_abs, 1e-300);
  return solver.eigenvalues().minCoeff() > tol;
}

inline bool validate_characteristic(const LabelKernel& kernel) {
  return validate_characteristic(kernel.classes(), kernel.matrix());
}

inline LabelKernel::LabelKernel(int m, std::vector<double> k)
    : m_(m), k_(std::move(k)) {
  for (double v : k_) max_abs_ = std::max(max_abs_, std::abs(v));
  Eigen::MatrixXd mat = detail::to_eigen(m_, k_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat);
  if (solver.eigenvalues().minCoeff() < -1e-10 * std::max(max_abs_, 1e-300))
    throw InvalidInputError("kernel matrix is not positive semi-definite");
  characteristic_ = validate_characteristic(m_, k_);
}

inline LabelKernel LabelKernel::discrete(int m) {
  if (m < 2) throw InvalidInputError("class count must be at least 2");
  std::vector<double> k(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) k[i * m + i] = 1.0;
  return LabelKernel(m, std::move(k));
}

inline LabelKernel LabelKernel::weighted_discrete(
    const std::vector<double>& weights) {
  int m = static_cast<int>(weights.size());
  if (m < 2) throw InvalidInputError("class count must be at least 2");
  std::vector<double> k(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    if (!(weights[i] > 0.0))
      throw InvalidInputError("kernel weights must be positive");
    k[i * m + i] = weights[i];
  }
  return LabelKernel(m, std::move(k));
}

// Accepts user-supplied matrices; symmetry is enforced to within 1e-12
// absolute and the matrix is then symmetrized, tolerating text-format
// round-trip noise.
inline LabelKernel LabelKernel::from_matrix(int m,
                                            std::vector<double> entries) {
  if (m < 2) throw InvalidInputError("class count must be at least 2");
  if (entries.size() != static_cast<std::size_t>(m) * m)
    throw InvalidInputError("kernel matrix has wrong size");
  for (double v : entries)
    if (!std::isfinite(v)) throw InvalidInputError("kernel entry not finite");
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double& upper = entries[i * m + j];
      double& lower = entries[j * m + i];
      if (std::abs(upper - lower) > 1e-12)
        throw InvalidInputError("kernel matrix is not symmetric at (" +
                                std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
      upper = lower = 0.5 * (upper + lower);
    }
  return LabelKernel(m, std::move(entries));
}

}  // namespace kmd
