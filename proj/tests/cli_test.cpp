// End-to-end checks of the command-line binary via subprocess calls.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kmd/harness.hpp"
#include "kmd/io.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(KMD_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  while (fgets(buffer.data(), buffer.size(), pipe))
    result.out += buffer.data();
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kmd_cli_" + std::to_string(::getpid()) + "_" +
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

void write_separated_blobs(const std::string& file, int per_class) {
  std::ofstream out(file);
  out << "x,y,label\n";
  std::mt19937_64 gen(9);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (int i = 0; i < per_class; ++i)
    out << normal(gen) << "," << normal(gen) << ",a\n";
  for (int i = 0; i < per_class; ++i)
    out << 30 + normal(gen) << "," << 30 + normal(gen) << ",b\n";
}

TEST_F(CliTest, TestSubcommandOnSeparatedBlobs) {
  write_separated_blobs(path("blobs.csv"), 40);
  auto res = run_cli("test --input " + path("blobs.csv") +
                     " --k 15 --perms 500 --seed 1 --output " +
                     path("report.json"));
  EXPECT_EQ(res.exit_code, 0) << res.out;
  EXPECT_NE(res.out.find("eta_hat=1 "), std::string::npos) << res.out;
  EXPECT_NE(res.out.find("p_permutation=0.001996"), std::string::npos)
      << res.out;

  std::ifstream in(path("report.json"));
  nlohmann::json j;
  in >> j;
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_DOUBLE_EQ(j["eta_hat"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["p_permutation"].get<double>(), 1.0 / 501);
  EXPECT_EQ(j["classes"], (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(j["k"], 15);
}

TEST_F(CliTest, EstimateRecoversUniformShiftEta) {
  // eta = 0.5 uniform-shift sample at n = 1000, k = 1
  kmd::ScenarioSpec spec{kmd::Scenario::uniform_shift, 1, 0.5, {500, 500},
                         17};
  auto data = kmd::generate(spec);
  kmd::write_points_csv(data, {"1", "2"}, path("shift.csv"));
  auto res = run_cli("estimate --k 1 --input " + path("shift.csv") +
                     " --seed 3");
  EXPECT_EQ(res.exit_code, 0) << res.out;
  double eta = std::stod(res.out.substr(res.out.find("eta_hat=") + 8));
  EXPECT_NEAR(eta, 0.5, 0.05) << res.out;
  // estimate omits the permutation p-value by default
  EXPECT_EQ(res.out.find("p_permutation"), std::string::npos);
}

TEST_F(CliTest, MissingInputFileExitsTwo) {
  auto res = run_cli("test --input " + path("nope.csv"));
  EXPECT_EQ(res.exit_code, 2);
  EXPECT_NE(res.out.find("error"), std::string::npos);
}

TEST_F(CliTest, BadFlagExitsTwo) {
  auto res = run_cli("test --no-such-flag 1");
  EXPECT_EQ(res.exit_code, 2);
}

TEST_F(CliTest, DistanceModePipeline) {
  write("d.csv", "0,1,9,9\n1,0,9,9\n9,9,0,1\n9,9,1,0\n");
  write("lab.csv", "a\na\nb\nb\n");
  auto res = run_cli("test --distances " + path("d.csv") + " --labels " +
                     path("lab.csv") + " --k 1 --perms 10 --seed 2");
  EXPECT_EQ(res.exit_code, 0) << res.out;
  EXPECT_NE(res.out.find("eta_hat=1 "), std::string::npos) << res.out;
}

TEST_F(CliTest, DumpGraphWritesAdjacency) {
  write("pts.csv", "x,label\n0,a\n1,a\n10,b\n11,b\n");
  auto res = run_cli("estimate --k 1 --input " + path("pts.csv") +
                     " --dump-graph " + path("graph.json") + " --seed 1");
  EXPECT_EQ(res.exit_code, 0) << res.out;
  std::ifstream in(path("graph.json"));
  nlohmann::json j;
  in >> j;
  EXPECT_EQ(j["n"], 4);
  EXPECT_EQ(j["kind"], "knn");
  EXPECT_EQ(j["out_neighbors"][0][0], 1);
}

TEST_F(CliTest, WeightedKernelFlag) {
  write("pts.csv",
        "x,label\n0,a\n0.5,a\n1,b\n1.5,b\n30,c\n30.5,c\n31,c\n31.5,c\n");
  auto res = run_cli("test --input " + path("pts.csv") +
                     " --k 2 --kernel weighted:10,1,1 --perms 20 --seed 4");
  EXPECT_EQ(res.exit_code, 0) << res.out;
  auto bad = run_cli("test --input " + path("pts.csv") +
                     " --k 2 --kernel weighted:10,1 --perms 20");
  EXPECT_EQ(bad.exit_code, 2);
}

TEST_F(CliTest, PopulationEtaFiniteModel) {
  write("model.json", R"({
    "model": "finite",
    "pi": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334],
    "p": [[0.5, 0.5, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5]]
  })");
  auto res = run_cli("population-eta --model " + path("model.json"));
  EXPECT_EQ(res.exit_code, 0) << res.out;
  EXPECT_NE(res.out.find("eta=0.5"), std::string::npos) << res.out;
}

TEST_F(CliTest, PopulationEtaUniformShift) {
  write("model.json", R"({"model": "uniform-shift", "shift": 0.1})");
  auto res = run_cli("population-eta --model " + path("model.json"));
  EXPECT_EQ(res.exit_code, 0) << res.out;
  EXPECT_NE(res.out.find("eta=0.1"), std::string::npos) << res.out;
}

TEST_F(CliTest, ConstantsCacheRoundTrip) {
  std::string args = "constants --graph knn --k 1 --d 1 --reps 500 --seed 5 "
                     "--cache " +
                     path("cache.json");
  auto first = run_cli(args);
  EXPECT_EQ(first.exit_code, 0) << first.out;
  auto second = run_cli(args);  // served from the cache
  EXPECT_EQ(second.exit_code, 0) << second.out;
  EXPECT_EQ(first.out, second.out);
  std::ifstream in(path("cache.json"));
  nlohmann::json cache;
  in >> cache;
  EXPECT_TRUE(cache.contains("knn:k=1:d=1:R=500:seed=5"));
}

TEST_F(CliTest, SimulatePowerStudyWritesCsvAndManifest) {
  auto res = run_cli(
      "simulate --study power --scenario normal-location --grid 0.0,0.8 "
      "--d 2 --per-class 30 --perms 30 --reps 20 --seed 6 --out " +
      path("study"));
  EXPECT_EQ(res.exit_code, 0) << res.out;
  std::ifstream csv(path("study_power.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "scenario,d,param,power,reps");
  std::ifstream mf(path("study_manifest.json"));
  nlohmann::json manifest;
  mf >> manifest;
  EXPECT_EQ(manifest["study"], "power");
  EXPECT_EQ(manifest["seed"], 6);
}

TEST_F(CliTest, EnvSeedIsUsed) {
  write("pts.csv", "x,label\n0,a\n0.4,a\n0.5,b\n1,b\n2,a\n2.5,b\n");
  std::string base = "test --input " + path("pts.csv") + " --k 2 --perms 50";
  auto res_env = run_cli("--help >/dev/null; KMD_SEED=77 " KMD_CLI_PATH " " +
                         base);
  auto res_flag = run_cli(base + " --seed 77");
  EXPECT_EQ(res_env.exit_code, 0) << res_env.out;
  EXPECT_EQ(res_env.out, res_flag.out);
}

}  // namespace
