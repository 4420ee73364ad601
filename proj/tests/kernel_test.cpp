#include "kmd/kernel.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

namespace {

using kmd::InvalidInputError;
using kmd::LabelKernel;

TEST(Kernel, DiscreteIsIdentity) {
  auto k3 = LabelKernel::discrete(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(k3(i, j), i == j ? 1.0 : 0.0);
  EXPECT_TRUE(k3.characteristic());

  auto k2 = LabelKernel::discrete(2);
  EXPECT_EQ(k2(0, 0), 1.0);
  EXPECT_EQ(k2(0, 1), 0.0);
  EXPECT_TRUE(k2.characteristic());
}

TEST(Kernel, DiscreteRejectsSmallClassCount) {
  EXPECT_THROW(LabelKernel::discrete(1), InvalidInputError);
  EXPECT_THROW(LabelKernel::discrete(0), InvalidInputError);
}

// alpha = (1,-1,0): alpha'K alpha = 2 > 0 for the identity kernel; the
// solver-based check must agree with the direct quadratic form.
TEST(Kernel, DiscreteQuadraticFormPositive) {
  auto k = LabelKernel::discrete(3);
  std::vector<double> alpha = {1.0, -1.0, 0.0};
  double q = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q += alpha[i] * alpha[j] * k(i, j);
  EXPECT_GT(q, 0.0);
  EXPECT_TRUE(validate_characteristic(k));
}

TEST(Kernel, WeightedDiscrete) {
  auto k2 = LabelKernel::weighted_discrete({10.0, 1.0, 1.0});
  EXPECT_EQ(k2(0, 0), 10.0);
  EXPECT_EQ(k2(1, 1), 1.0);
  EXPECT_EQ(k2(2, 2), 1.0);
  EXPECT_EQ(k2(0, 1), 0.0);
  EXPECT_TRUE(k2.characteristic());

  auto k = LabelKernel::weighted_discrete({1.0, 1.0});
  EXPECT_EQ(k.matrix(), LabelKernel::discrete(2).matrix());
}

TEST(Kernel, WeightedDiscreteRejectsNonpositive) {
  EXPECT_THROW(LabelKernel::weighted_discrete({1.0, 0.0}),
               InvalidInputError);
  EXPECT_THROW(LabelKernel::weighted_discrete({1.0, -2.0}),
               InvalidInputError);
}

// (2,3) weights, alpha=(1,-1): quadratic form 5 > 0.
TEST(Kernel, WeightedDiagonalCharacteristic) {
  auto k = LabelKernel::weighted_discrete({2.0, 3.0});
  EXPECT_TRUE(k.characteristic());
}

TEST(Kernel, ConstantKernelNotCharacteristic) {
  std::vector<double> ones(9, 1.0);
  auto k = LabelKernel::from_matrix(3, ones);
  EXPECT_FALSE(k.characteristic());
}

TEST(Kernel, TwoByTwoCorrelationCharacteristic) {
  auto k = LabelKernel::from_matrix(2, {2.0, 1.0, 1.0, 2.0});
  EXPECT_TRUE(k.characteristic());
}

TEST(Kernel, FromMatrixRejectsAsymmetry) {
  EXPECT_THROW(LabelKernel::from_matrix(2, {1.0, 0.5, 0.2, 1.0}),
               InvalidInputError);
}

TEST(Kernel, FromMatrixSymmetrizesRoundTripNoise) {
  double eps = 5e-13;
  auto k = LabelKernel::from_matrix(2, {1.0, 0.25 + eps, 0.25 - eps, 1.0});
  EXPECT_DOUBLE_EQ(k(0, 1), k(1, 0));
}

TEST(Kernel, FromMatrixRejectsIndefinite) {
  EXPECT_THROW(LabelKernel::from_matrix(2, {0.0, 1.0, 1.0, 0.0}),
               InvalidInputError);
}

TEST(Kernel, ValidateCharacteristicRejectsAsymmetric) {
  EXPECT_THROW(kmd::validate_characteristic(2, {1.0, 0.6, 0.2, 1.0}),
               InvalidInputError);
}

// Relabeling equivariance: conjugating by a permutation matrix cannot
// change the characteristic verdict.
TEST(Kernel, RelabelingEquivariance) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    int m = 2 + static_cast<int>(gen() % 4);
    // Random PSD matrix A'A, occasionally made singular on the zero-sum
    // subspace by using a rank-1 factor.
    int rank = (rep % 3 == 0) ? 1 : m;
    std::vector<double> a(static_cast<std::size_t>(rank) * m);
    for (auto& v : a) v = unif(gen);
    std::vector<double> k(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int r = 0; r < rank; ++r) k[i * m + j] += a[r * m + i] * a[r * m + j];
    bool base = kmd::validate_characteristic(m, k);

    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pk(k.size());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        pk[i * m + j] = k[perm[i] * m + perm[j]];
    EXPECT_EQ(base, kmd::validate_characteristic(m, pk));
  }
}

TEST(Kernel, DiscreteCharacteristicForAllM) {
  for (int m = 2; m <= 12; ++m)
    EXPECT_TRUE(LabelKernel::discrete(m).characteristic()) << m;
}

// K(i,j) = f(i) + f(j) vanishes on the zero-sum subspace, so it can never
// be characteristic (when it is PSD at all).
TEST(Kernel, AdditiveKernelsNeverCharacteristic) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    int m = 2 + static_cast<int>(gen() % 4);
    std::vector<double> f(m);
    for (auto& v : f) v = unif(gen);
    std::vector<double> k(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) k[i * m + j] = f[i] + f[j];
    EXPECT_FALSE(kmd::validate_characteristic(m, k));
  }
}

}  // namespace
