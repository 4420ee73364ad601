#include "kmd/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "kmd/estimator.hpp"

namespace {

using kmd::LabeledDataset;
using kmd::Scenario;
using kmd::ScenarioSpec;

double class_mean(const LabeledDataset& data, int cls, int coord) {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (data.labels()[i] != cls) continue;
    sum += data.points().row(i)[coord];
    ++count;
  }
  return sum / count;
}

double class_var(const LabeledDataset& data, int cls, int coord) {
  double mean = class_mean(data, cls, coord);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (data.labels()[i] != cls) continue;
    double diff = data.points().row(i)[coord] - mean;
    sum += diff * diff;
    ++count;
  }
  return sum / (count - 1);
}

TEST(Generate, NormalLocationShiftsMeans) {
  ScenarioSpec spec{Scenario::normal_location, 2, 0.1,
                    std::vector<int>(3, 4000), 7};
  auto data = generate(spec);
  EXPECT_EQ(data.size(), 12000);
  EXPECT_EQ(data.classes(), 3);
  EXPECT_NEAR(class_mean(data, 0, 0), 0.0, 0.06);
  EXPECT_NEAR(class_mean(data, 1, 0), 0.1, 0.06);
  EXPECT_NEAR(class_mean(data, 2, 1), 0.2, 0.06);
}

TEST(Generate, NormalScaleInflatesVariance) {
  ScenarioSpec spec{Scenario::normal_scale, 3, 0.5,
                    std::vector<int>(3, 4000), 11};
  auto data = generate(spec);
  EXPECT_NEAR(class_var(data, 0, 0), 1.0, 0.1);
  EXPECT_NEAR(class_var(data, 1, 1), 1.5, 0.15);
  EXPECT_NEAR(class_var(data, 2, 2), 2.0, 0.2);
}

TEST(Generate, SphericalNullAtZeroAlpha) {
  // Beta(1,1) radial densities equal Uniform[0,1]: all classes identical.
  ScenarioSpec spec{Scenario::spherical, 3, 0.0, std::vector<int>(3, 3000),
                    13};
  auto data = generate(spec);
  // Radii uniform on [0,1]: mean 1/2 in every class.
  for (int cls = 0; cls < 3; ++cls) {
    double mean_r = 0.0;
    int count = 0;
    for (int i = 0; i < data.size(); ++i) {
      if (data.labels()[i] != cls) continue;
      double r2 = 0.0;
      for (int t = 0; t < 3; ++t)
        r2 += data.points().row(i)[t] * data.points().row(i)[t];
      mean_r += std::sqrt(r2);
      ++count;
    }
    EXPECT_NEAR(mean_r / count, 0.5, 0.02) << cls;
  }
}

TEST(Generate, UniformShiftSeparation) {
  ScenarioSpec spec{Scenario::uniform_shift, 1, 1.0, {2000, 2000}, 17};
  auto data = generate(spec);
  for (int i = 0; i < data.size(); ++i) {
    double x = data.points().row(i)[0];
    if (data.labels()[i] == 0) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    } else {
      EXPECT_GE(x, 1.0);
      EXPECT_LE(x, 2.0);
    }
  }
}

TEST(Generate, UShapeAndSShapeAreTwoDimensional) {
  for (Scenario id : {Scenario::u_shape_scale, Scenario::s_shape_rotation}) {
    ScenarioSpec spec{id, 7, 1.1, std::vector<int>(3, 50), 19};
    auto data = generate(spec);
    EXPECT_EQ(data.points().dim(), 2) << to_string(id);
  }
}

TEST(Generate, RejectsBadSpecs) {
  ScenarioSpec bad{Scenario::normal_location, 2, 0.1, {5, 0, 5}, 1};
  EXPECT_THROW(kmd::generate(bad), kmd::InvalidInputError);
  EXPECT_THROW(kmd::scenario_from_string("no-such-scenario"),
               kmd::InvalidInputError);
}

TEST(Generate, DeterministicGivenSeed) {
  ScenarioSpec spec{Scenario::s_shape_rotation, 2, 0.2,
                    std::vector<int>(3, 40), 23};
  auto a = generate(spec);
  auto b = generate(spec);
  EXPECT_EQ(a.points().coords(), b.points().coords());
  EXPECT_EQ(a.labels(), b.labels());
}

TEST(PowerStudy, DeterministicAndCalibratedAtNull) {
  kmd::TestConfig config;
  config.permutations = 60;
  auto study =
      kmd::run_power_study(Scenario::normal_location, {0.0, 0.6}, 2,
                           std::vector<int>(3, 40), config, 60, 0.05, 31);
  ASSERT_EQ(study.rows.size(), 2u);
  // null point: power near the level; strong alternative: high power
  EXPECT_LT(study.rows[0].power, 0.25);
  EXPECT_GT(study.rows[1].power, 0.75);

  auto again =
      kmd::run_power_study(Scenario::normal_location, {0.0, 0.6}, 2,
                           std::vector<int>(3, 40), config, 60, 0.05, 31);
  for (std::size_t i = 0; i < study.rows.size(); ++i)
    EXPECT_EQ(study.rows[i].power, again.rows[i].power);
}

TEST(PowerStudy, PowerNondecreasingAlongSeparation) {
  kmd::TestConfig config;
  config.permutations = 0;  // asymptotic test keeps this test fast
  auto study =
      kmd::run_power_study(Scenario::normal_location, {0.0, 0.3, 0.8}, 2,
                           std::vector<int>(3, 60), config, 80, 0.05, 37);
  // allow small Monte-Carlo dips
  EXPECT_LE(study.rows[0].power, study.rows[1].power + 0.1);
  EXPECT_LE(study.rows[1].power, study.rows[2].power + 0.1);
}

TEST(ThresholdSweep, TinySignalStaysAtLevel) {
  auto study = kmd::run_threshold_sweep(2, 400, 0.5, {-0.9}, {1}, 100, 0.05,
                                        41);
  ASSERT_EQ(study.rows.size(), 1u);
  EXPECT_LT(study.rows[0].power, 0.15);
  EXPECT_THROW(
      kmd::run_threshold_sweep(2, 100, 0.5, {-1.5}, {1}, 10, 0.05, 1),
      kmd::InvalidInputError);
}

TEST(KStudy, CompleteGraphGivesZeroAndKOneLeastBias) {
  ScenarioSpec base{Scenario::uniform_shift, 1, 1.0, {30, 30}, 0};
  auto study = kmd::run_k_study(base, 1.0, {1, 5, 20, 59}, 40, 43);
  ASSERT_EQ(study.rows.size(), 4u);
  // k = n-1 forces the estimate to 0 in every replicate
  EXPECT_EQ(study.rows[3].mean_eta, 0.0);
  EXPECT_EQ(study.rows[3].mse, 1.0);
  // bias grows with k
  EXPECT_GT(study.rows[0].mean_eta, study.rows[1].mean_eta);
  EXPECT_GT(study.rows[1].mean_eta, study.rows[2].mean_eta);
  EXPECT_NEAR(study.rows[0].mean_eta, 1.0, 0.05);
}

TEST(NullClt, MeanNearZeroAndCalibrated) {
  auto rows = kmd::run_null_clt({60}, 2, 400, 0, 0.05, 47);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_z, 0.0, 3.0 / std::sqrt(400.0));
  EXPECT_NEAR(rows[0].rejection_rate, 0.05, 0.05);
  EXPECT_LT(rows[0].ks_distance, 0.12);
  EXPECT_EQ(rows[0].z_scores.size(), 400u);
}

TEST(KsDistance, ExactOnTinySample) {
  // Single z at 0: CDF jumps from 0 to 1 around Phi(0) = 0.5.
  EXPECT_NEAR(kmd::ks_distance_to_standard_normal({0.0}), 0.5, 1e-12);
}

}  // namespace
