#include "kmd/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using kmd::InvalidInputError;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kmd_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name));
    out << content;
  }

  fs::path dir_;
};

using IoTest = TempDir;

TEST_F(IoTest, PointsCsvBasic) {
  write("pts.csv", "x,label\n0.0,a\n1.0,a\n10.0,b\n11.0,b\n");
  auto in = kmd::ingest_points_csv(path("pts.csv"));
  EXPECT_EQ(in.dataset.size(), 4);
  EXPECT_EQ(in.dataset.classes(), 2);
  EXPECT_EQ(in.dataset.counts(), (std::vector<int>{2, 2}));
  EXPECT_EQ(in.class_names, (std::vector<std::string>{"a", "b"}));
}

TEST_F(IoTest, IntegerLabelsPreserved) {
  write("pts.csv", "x,y,label\n0,0,3\n1,0,1\n0,1,2\n1,1,1\n");
  auto in = kmd::ingest_points_csv(path("pts.csv"));
  EXPECT_EQ(in.class_names, (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(in.dataset.labels(), (std::vector<int>{2, 0, 1, 0}));
}

TEST_F(IoTest, NonContiguousIntegerLabelsMapByAppearance) {
  write("pts.csv", "x,label\n0,5\n1,7\n2,5\n");
  auto in = kmd::ingest_points_csv(path("pts.csv"));
  EXPECT_EQ(in.class_names, (std::vector<std::string>{"5", "7"}));
}

TEST_F(IoTest, PointsCsvErrors) {
  write("nolabel.csv", "x,y\n0,1\n");
  EXPECT_THROW(kmd::ingest_points_csv(path("nolabel.csv")),
               InvalidInputError);

  write("nan.csv", "x,label\n0,a\nnan,b\n");
  try {
    kmd::ingest_points_csv(path("nan.csv"));
    FAIL() << "expected error";
  } catch (const InvalidInputError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos)
        << e.what();
  }

  write("single.csv", "x,label\n0,a\n1,a\n");
  EXPECT_THROW(kmd::ingest_points_csv(path("single.csv")), InvalidInputError);

  EXPECT_THROW(kmd::ingest_points_csv(path("missing.csv")),
               InvalidInputError);
}

TEST_F(IoTest, DistanceCsvBasic) {
  write("d.csv", "0,1,4\n1,0,2\n4,2,0\n");
  write("lab.csv", "a\nb\nb\n");
  auto in = kmd::ingest_distance_csv(path("d.csv"), path("lab.csv"));
  EXPECT_EQ(in.dataset.size(), 3);
  EXPECT_FALSE(in.dataset.points().euclidean());
  EXPECT_DOUBLE_EQ(in.dataset.points().distance(0, 2), 4.0);
}

TEST_F(IoTest, DistanceCsvErrors) {
  write("asym.csv", "0,1,4\n1.5,0,2\n4,2,0\n");
  write("lab.csv", "a\nb\nb\n");
  EXPECT_THROW(kmd::ingest_distance_csv(path("asym.csv"), path("lab.csv")),
               InvalidInputError);

  write("d.csv", "0,1,4\n1,0,2\n4,2,0\n");
  write("short.csv", "a\nb\n");
  EXPECT_THROW(kmd::ingest_distance_csv(path("d.csv"), path("short.csv")),
               InvalidInputError);
}

TEST_F(IoTest, RoundTripPoints) {
  std::mt19937_64 gen(3);
  auto pts = kmd::testutil::random_points(gen, 20, 3);
  auto labels = kmd::testutil::random_labels(gen, 20, 3);
  kmd::LabeledDataset data(std::move(pts), labels, 3);
  std::vector<std::string> names = {"red", "green", "blue"};

  kmd::write_points_csv(data, names, path("out.csv"));
  auto in = kmd::ingest_points_csv(path("out.csv"));
  EXPECT_EQ(in.dataset.points().coords(), data.points().coords());
  EXPECT_EQ(in.dataset.labels(), data.labels());
  EXPECT_EQ(in.class_names, names);
}

TEST_F(IoTest, RoundTripDistances) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.5, 3.0);
  int n = 8;
  std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      dist[i * n + j] = dist[j * n + i] = unif(gen);
  kmd::LabeledDataset data(kmd::PointSet::from_distances(n, dist),
                           kmd::testutil::random_labels(gen, n, 2), 2);
  std::vector<std::string> names = {"x", "y"};

  kmd::write_distance_csv(data, names, path("m.csv"), path("l.csv"));
  auto in = kmd::ingest_distance_csv(path("m.csv"), path("l.csv"));
  EXPECT_EQ(in.dataset.points().distance_matrix(),
            data.points().distance_matrix());
  EXPECT_EQ(in.dataset.labels(), data.labels());
}

TEST_F(IoTest, ReportJsonSchema) {
  std::mt19937_64 gen(7);
  auto pts = kmd::testutil::random_points(gen, 50, 2);
  auto labels = kmd::testutil::random_labels(gen, 50, 2);
  kmd::LabeledDataset data(std::move(pts), labels, 2);
  kmd::TestConfig config;
  config.permutations = 20;
  auto report = kmd::kmd_test(data, config);
  auto j = kmd::report_to_json(report, {"a", "b"});

  EXPECT_EQ(j["schema_version"], kmd::kReportSchemaVersion);
  for (const char* key :
       {"eta_hat", "numerator", "denominator", "a_tilde", "b_tilde",
        "c_tilde", "g1_tilde", "g2_tilde", "g3_tilde", "perm_variance", "z",
        "p_asymptotic", "p_permutation", "n_permutations", "seed", "n",
        "counts", "classes", "graph", "k", "max_total_degree",
        "degree_bound_exceeded"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["graph"], "knn");
  EXPECT_DOUBLE_EQ(j["eta_hat"].get<double>(), report.eta);
}

TEST_F(IoTest, ConstantsJsonRoundTrip) {
  auto c = kmd::mc_null_constants(kmd::GraphKind::knn_directed, 1, 1, 64.0,
                                  200, 9);
  auto j = kmd::constants_to_json(c);
  auto back = kmd::constants_from_json(j);
  EXPECT_EQ(back.g1, c.g1);
  EXPECT_EQ(back.g3, c.g3);
  EXPECT_EQ(back.reps, c.reps);
  EXPECT_EQ(back.kind, c.kind);
  EXPECT_EQ(kmd::constants_cache_key(c.kind, c.k, c.d, c.reps, c.seed),
            "knn:k=1:d=1:R=200:seed=9");
}

TEST_F(IoTest, StudyCsvHeaders) {
  kmd::PowerStudy power;
  power.scenario = kmd::Scenario::normal_scale;
  power.d = 10;
  power.rows.push_back({0.5, 0.8, 100});
  auto csv = kmd::power_study_csv(power);
  EXPECT_NE(csv.find("scenario,d,param,power,reps"), std::string::npos);
  EXPECT_NE(csv.find("normal-scale,10,0.5,0.8,100"), std::string::npos);
}

}  // namespace
