// Command-line front end: data ingestion, subcommand routing, and
// serialized outputs. Exit codes: 0 success, 2 invalid input, 1 internal.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmd/kmd.hpp"

namespace {

using nlohmann::json;

std::uint64_t env_default_seed() {
  if (const char* env = std::getenv("KMD_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw kmd::InvalidInputError("KMD_SEED is not an integer");
    }
  }
  return kmd::kDefaultSeed;
}

kmd::GraphKind parse_graph(const std::string& name) {
  if (name == "knn") return kmd::GraphKind::knn_directed;
  if (name == "knn-undirected") return kmd::GraphKind::knn_undirected;
  if (name == "mst") return kmd::GraphKind::mst;
  throw kmd::InvalidInputError("unknown graph kind: " + name);
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (...) {
      throw kmd::InvalidInputError("not a number: " + cell);
    }
  }
  if (out.empty()) throw kmd::InvalidInputError("empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

// --kernel discrete | weighted:w1,...,wM | file:path (CSV of M rows)
kmd::LabelKernel parse_kernel(const std::string& spec, int m) {
  if (spec.empty() || spec == "discrete") return kmd::LabelKernel::discrete(m);
  if (spec.rfind("weighted:", 0) == 0) {
    auto weights = parse_double_list(spec.substr(9));
    if (static_cast<int>(weights.size()) != m)
      throw kmd::InvalidInputError("expected " + std::to_string(m) +
                                   " kernel weights");
    return kmd::LabelKernel::weighted_discrete(weights);
  }
  if (spec.rfind("file:", 0) == 0) {
    std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw kmd::InvalidInputError("cannot open kernel file: " + path);
    std::vector<double> entries;
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      auto row = parse_double_list(line);
      entries.insert(entries.end(), row.begin(), row.end());
      ++rows;
    }
    if (rows != m || static_cast<int>(entries.size()) != m * m)
      throw kmd::InvalidInputError("kernel file must be an " +
                                   std::to_string(m) + "x" +
                                   std::to_string(m) + " matrix");
    return kmd::LabelKernel::from_matrix(m, std::move(entries));
  }
  throw kmd::InvalidInputError("unknown kernel spec: " + spec);
}

struct DatasetOptions {
  std::string points_path;
  std::string distances_path;
  std::string labels_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--input", points_path,
                    "points CSV with a header and a 'label' column");
    cmd->add_option("--distances", distances_path,
                    "precomputed distance matrix CSV (headerless, n x n)");
    cmd->add_option("--labels", labels_path,
                    "labels file for --distances (one per line)");
  }

  kmd::IngestResult load() const {
    if (!points_path.empty()) {
      if (!distances_path.empty())
        throw kmd::InvalidInputError(
            "--input and --distances are mutually exclusive");
      return kmd::ingest_points_csv(points_path);
    }
    if (distances_path.empty())
      throw kmd::InvalidInputError("need --input or --distances");
    if (labels_path.empty())
      throw kmd::InvalidInputError("--distances requires --labels");
    return kmd::ingest_distance_csv(distances_path, labels_path);
  }
};

struct TestOptions {
  DatasetOptions data;
  int k = 0;
  std::string graph = "knn";
  std::string kernel = "discrete";
  int perms = 500;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string output;
  std::string dump_graph;

  void attach(CLI::App* cmd, int default_perms) {
    perms = default_perms;
    data.attach(cmd);
    cmd->add_option("--k", k, "neighbor count (0 uses the subcommand default)");
    cmd->add_option("--graph", graph, "knn | knn-undirected | mst")
        ->default_val("knn");
    cmd->add_option("--kernel", kernel,
                    "discrete | weighted:w1,...,wM | file:<csv>");
    cmd->add_option("--perms", perms, "permutation count (0 disables)");
    cmd->add_option("--seed", seed, "RNG seed")->each([this](std::string) {
      seed_set = true;
    });
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    cmd->add_option("--output", output, "write the JSON report here");
    cmd->add_option("--dump-graph", dump_graph,
                    "write the graph adjacency as JSON");
  }
};

int run_test_like(const TestOptions& opt, bool estimate_mode) {
  auto in = opt.data.load();
  int n = in.dataset.size();
  kmd::TestConfig config;
  config.graph = parse_graph(opt.graph);
  config.k = opt.k > 0 ? opt.k : (estimate_mode ? 1 : kmd::default_test_k(n));
  config.kernel = parse_kernel(opt.kernel, in.dataset.classes());
  config.permutations = opt.perms;
  config.seed = opt.seed_set ? opt.seed : env_default_seed();
  config.threads = opt.threads;

  auto report = kmd::kmd_test(in.dataset, config);

  std::ostringstream line;
  line.precision(10);
  line << "eta_hat=" << report.eta << " z=" << report.z
       << " p_asymptotic=" << report.p_asymptotic;
  if (report.p_permutation.has_value())
    line << " p_permutation=" << *report.p_permutation;
  std::cout << line.str() << "\n";

  if (!opt.output.empty()) {
    auto j = kmd::report_to_json(report, in.class_names);
    kmd::write_text_file(opt.output, j.dump(2) + "\n");
  }
  if (!opt.dump_graph.empty()) {
    auto graph = config.graph == kmd::GraphKind::mst
                     ? kmd::build_mst(in.dataset.points())
                     : kmd::build_knn(in.dataset.points(), report.k,
                                      config.graph ==
                                          kmd::GraphKind::knn_directed,
                                      config.seed, config.threads);
    kmd::write_text_file(opt.dump_graph,
                         kmd::graph_to_json(graph).dump(2) + "\n");
  }
  return 0;
}

kmd::LabelKernel kernel_from_model_json(const json& j, int m) {
  if (!j.contains("kernel") || j["kernel"].is_null() ||
      j["kernel"] == "discrete")
    return kmd::LabelKernel::discrete(m);
  const auto& spec = j["kernel"];
  if (spec.contains("weights"))
    return kmd::LabelKernel::weighted_discrete(
        spec["weights"].get<std::vector<double>>());
  if (spec.contains("matrix")) {
    auto rows = spec["matrix"].get<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& row : rows)
      flat.insert(flat.end(), row.begin(), row.end());
    return kmd::LabelKernel::from_matrix(m, std::move(flat));
  }
  throw kmd::InvalidInputError("unrecognized kernel description");
}

int run_population_eta(const std::string& model_path) {
  std::ifstream in(model_path);
  if (!in) throw kmd::InvalidInputError("cannot open model: " + model_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw kmd::InvalidInputError("bad model JSON: " + std::string(e.what()));
  }
  std::string model = j.at("model");
  double eta = 0.0;
  if (model == "finite") {
    kmd::FiniteJointModel fm;
    fm.pi = j.at("pi").get<std::vector<double>>();
    fm.p = j.at("p").get<std::vector<std::vector<double>>>();
    eta = kmd::eta_exact_finite(
        fm, kernel_from_model_json(j, static_cast<int>(fm.p.size())));
  } else if (model == "uniform-shift") {
    double shift = j.at("shift");
    eta = kmd::eta_two_sample_1d(kmd::uniform_density(0, 1),
                                 kmd::uniform_density(shift, 1 + shift),
                                 j.value("pi1", 0.5));
  } else if (model == "gaussian-location") {
    eta = kmd::eta_two_sample_1d(kmd::gaussian_density(0, 1),
                                 kmd::gaussian_density(j.at("lambda"), 1),
                                 j.value("pi1", 0.5));
  } else if (model == "gaussian-scale") {
    double lambda = j.at("lambda");
    if (!(lambda > 0))
      throw kmd::InvalidInputError("lambda must be positive");
    eta = kmd::eta_two_sample_1d(kmd::gaussian_density(0, 1),
                                 kmd::gaussian_density(0, 1.0 / lambda),
                                 j.value("pi1", 0.5));
  } else {
    throw kmd::InvalidInputError("unknown model type: " + model);
  }
  std::cout.precision(12);
  std::cout << "eta=" << eta << "\n";
  return 0;
}

struct ConstantsOptions {
  std::string graph = "knn";
  int k = 1;
  int d = 1;
  long reps = 100000;
  double window_volume = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string cache;
  std::string output;
};

int run_constants(const ConstantsOptions& opt) {
  std::uint64_t seed = opt.seed_set ? opt.seed : env_default_seed();
  auto kind = parse_graph(opt.graph);
  std::string key = kmd::constants_cache_key(kind, opt.k, opt.d, opt.reps,
                                             seed);
  json cache = json::object();
  if (!opt.cache.empty()) {
    std::ifstream in(opt.cache);
    if (in) {
      try {
        in >> cache;
      } catch (const json::exception&) {
        throw kmd::InvalidInputError("corrupt cache file: " + opt.cache);
      }
    }
  }

  kmd::NullConstants constants;
  if (cache.contains(key)) {
    constants = kmd::constants_from_json(cache[key]);
  } else {
    constants = kmd::mc_null_constants(kind, opt.k, opt.d, opt.window_volume,
                                       opt.reps, seed, opt.threads);
    if (!opt.cache.empty()) {
      cache[key] = kmd::constants_to_json(constants);
      kmd::write_text_file(opt.cache, cache.dump(2) + "\n");
    }
  }

  std::cout.precision(10);
  std::cout << "g1=" << constants.g1 << " g2=" << constants.g2
            << " g3=" << constants.g3 << " se1=" << constants.se1
            << " se2=" << constants.se2 << " se3=" << constants.se3 << "\n";
  if (!opt.output.empty())
    kmd::write_text_file(opt.output,
                         kmd::constants_to_json(constants).dump(2) + "\n");
  return 0;
}

struct SimulateOptions {
  std::string study = "power";
  std::string scenario = "normal-location";
  std::string grid = "0.0,0.1";
  int d = 2;
  int per_class = 100;
  std::string sizes;
  int k = 0;
  std::string graph = "knn";
  std::string kernel = "discrete";
  int perms = 500;
  double alpha = 0.05;
  int reps = 1000;
  double pi1 = 2.0 / 3;
  int n_total = 6000;
  std::string b_grid = "-0.45,-0.35,-0.25,-0.15";
  std::string k_list = "1,2,3";
  std::string k_grid = "1,2,5,10,20";
  double eta_true = 0.5;
  double param = 0.5;
  std::string ni_grid = "100";
  std::string n_grid = "500,1000,2000";
  long mc_reps = 100000;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out_prefix = "kmd_study";
};

int run_simulate(const SimulateOptions& opt) {
  std::uint64_t seed = opt.seed_set ? opt.seed : env_default_seed();
  json manifest;
  manifest["study"] = opt.study;
  manifest["seed"] = seed;
  std::vector<std::string> outputs;

  if (opt.study == "power") {
    auto id = kmd::scenario_from_string(opt.scenario);
    auto grid = parse_double_list(opt.grid);
    std::vector<int> sizes = opt.sizes.empty()
                                 ? kmd::default_sizes(id, opt.per_class)
                                 : parse_int_list(opt.sizes);
    kmd::TestConfig config;
    config.graph = parse_graph(opt.graph);
    config.k = opt.k;
    int m = static_cast<int>(sizes.size());
    config.kernel = parse_kernel(opt.kernel, m);
    config.permutations = opt.perms;
    config.threads = opt.threads;
    auto study = kmd::run_power_study(id, grid, opt.d, sizes, config,
                                      opt.reps, opt.alpha, seed);
    std::string path = opt.out_prefix + "_power.csv";
    kmd::write_text_file(path, kmd::power_study_csv(study));
    outputs.push_back(path);
    manifest["scenario"] = opt.scenario;
    manifest["grid"] = grid;
    manifest["d"] = opt.d;
    manifest["sizes"] = sizes;
    manifest["k"] = opt.k;
    manifest["graph"] = opt.graph;
    manifest["kernel"] = opt.kernel;
    manifest["perms"] = opt.perms;
    manifest["alpha"] = opt.alpha;
    manifest["reps"] = opt.reps;
  } else if (opt.study == "threshold") {
    auto study = kmd::run_threshold_sweep(
        opt.d, opt.n_total, opt.pi1, parse_double_list(opt.b_grid),
        parse_int_list(opt.k_list), opt.reps, opt.alpha, seed, opt.threads);
    std::string path = opt.out_prefix + "_threshold.csv";
    kmd::write_text_file(path, kmd::threshold_study_csv(study));
    outputs.push_back(path);
    manifest["d"] = opt.d;
    manifest["n_total"] = opt.n_total;
    manifest["pi1"] = opt.pi1;
    manifest["b_grid"] = parse_double_list(opt.b_grid);
    manifest["k_list"] = parse_int_list(opt.k_list);
    manifest["alpha"] = opt.alpha;
    manifest["reps"] = opt.reps;
    // predicted transition exponent for the scale family
    manifest["predicted_threshold"] =
        opt.d <= 8 ? -0.25
                   : (opt.pi1 > 0.5 ? -0.5 + 2.0 / opt.d : -2.0 / opt.d);
  } else if (opt.study == "k-study") {
    auto id = kmd::scenario_from_string(opt.scenario);
    std::vector<int> sizes = opt.sizes.empty()
                                 ? kmd::default_sizes(id, opt.per_class)
                                 : parse_int_list(opt.sizes);
    kmd::ScenarioSpec base{id, opt.d, opt.param, sizes, seed};
    auto study = kmd::run_k_study(base, opt.eta_true,
                                  parse_int_list(opt.k_grid), opt.reps, seed,
                                  opt.threads);
    std::string path = opt.out_prefix + "_kstudy.csv";
    kmd::write_text_file(path, kmd::k_study_csv(study));
    outputs.push_back(path);
    manifest["scenario"] = opt.scenario;
    manifest["param"] = opt.param;
    manifest["eta_true"] = opt.eta_true;
    manifest["k_grid"] = parse_int_list(opt.k_grid);
    manifest["sizes"] = sizes;
    manifest["d"] = opt.d;
    manifest["reps"] = opt.reps;
  } else if (opt.study == "null-clt") {
    auto rows = kmd::run_null_clt(parse_int_list(opt.ni_grid), opt.d,
                                  opt.reps, opt.k, opt.alpha, seed,
                                  opt.threads);
    std::string path = opt.out_prefix + "_nullclt.csv";
    kmd::write_text_file(path, kmd::null_clt_csv(rows));
    outputs.push_back(path);
    std::ostringstream zs;
    zs.precision(12);
    zs << "per_class,z\n";
    for (const auto& row : rows)
      for (double z : row.z_scores) zs << row.per_class << "," << z << "\n";
    std::string zpath = opt.out_prefix + "_nullclt_z.csv";
    kmd::write_text_file(zpath, zs.str());
    outputs.push_back(zpath);
    manifest["ni_grid"] = parse_int_list(opt.ni_grid);
    manifest["d"] = opt.d;
    manifest["k"] = opt.k;
    manifest["alpha"] = opt.alpha;
    manifest["reps"] = opt.reps;
  } else if (opt.study == "convergence") {
    auto table = kmd::compare_gtilde_convergence(
        opt.d, std::max(opt.k, 1), parse_int_list(opt.n_grid), opt.reps,
        seed, opt.mc_reps, opt.threads);
    std::string path = opt.out_prefix + "_convergence.csv";
    kmd::write_text_file(path, kmd::convergence_csv(table));
    outputs.push_back(path);
    manifest["d"] = opt.d;
    manifest["k"] = std::max(opt.k, 1);
    manifest["n_grid"] = parse_int_list(opt.n_grid);
    manifest["reps"] = opt.reps;
    manifest["mc_reps"] = opt.mc_reps;
  } else {
    throw kmd::InvalidInputError("unknown study: " + opt.study);
  }

  manifest["outputs"] = outputs;
  kmd::write_text_file(opt.out_prefix + "_manifest.json",
                       manifest.dump(2) + "\n");
  std::cout << "wrote " << outputs.size() + 1 << " files with prefix "
            << opt.out_prefix << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel measure of multi-sample dissimilarity"};
  app.require_subcommand(1);

  TestOptions test_opt;
  auto* test_cmd = app.add_subcommand(
      "test", "test equality of the M distributions (default k = 0.1 n)");
  test_opt.attach(test_cmd, 500);

  TestOptions est_opt;
  auto* est_cmd = app.add_subcommand(
      "estimate", "estimate the dissimilarity (default k = 1, no permutations)");
  est_opt.attach(est_cmd, 0);

  std::string model_path;
  auto* pop_cmd = app.add_subcommand("population-eta",
                                     "population value for a model JSON");
  pop_cmd->add_option("--model", model_path, "model description JSON")
      ->required();

  ConstantsOptions const_opt;
  auto* const_cmd = app.add_subcommand(
      "constants", "Monte-Carlo distribution-free null constants");
  const_cmd->add_option("--graph", const_opt.graph, "knn | knn-undirected | mst");
  const_cmd->add_option("--k", const_opt.k, "neighbor count");
  const_cmd->add_option("--d", const_opt.d, "dimension");
  const_cmd->add_option("--reps", const_opt.reps, "replicates");
  const_cmd->add_option("--window-volume", const_opt.window_volume,
                        "override the sampling window volume");
  const_cmd->add_option("--seed", const_opt.seed, "RNG seed")
      ->each([&](std::string) { const_opt.seed_set = true; });
  const_cmd->add_option("--threads", const_opt.threads, "worker threads");
  const_cmd->add_option("--cache", const_opt.cache,
                        "JSON cache keyed by (graph,k,d,R,seed)");
  const_cmd->add_option("--output", const_opt.output, "write constants JSON");

  SimulateOptions sim_opt;
  auto* sim_cmd = app.add_subcommand("simulate", "synthetic studies");
  sim_cmd->add_option("--study", sim_opt.study,
                      "power | threshold | k-study | null-clt | convergence");
  sim_cmd->add_option("--scenario", sim_opt.scenario, "scenario name");
  sim_cmd->add_option("--grid", sim_opt.grid, "scenario parameter grid");
  sim_cmd->add_option("--d", sim_opt.d, "dimension");
  sim_cmd->add_option("--per-class", sim_opt.per_class, "per-class size");
  sim_cmd->add_option("--sizes", sim_opt.sizes, "explicit class sizes");
  sim_cmd->add_option("--k", sim_opt.k, "neighbor count (0 = default)");
  sim_cmd->add_option("--graph", sim_opt.graph, "graph kind");
  sim_cmd->add_option("--kernel", sim_opt.kernel, "kernel spec");
  sim_cmd->add_option("--perms", sim_opt.perms, "permutations per test");
  sim_cmd->add_option("--alpha", sim_opt.alpha, "test level");
  sim_cmd->add_option("--reps", sim_opt.reps, "replications per cell");
  sim_cmd->add_option("--pi1", sim_opt.pi1, "first-class proportion");
  sim_cmd->add_option("--n-total", sim_opt.n_total, "total sample size");
  sim_cmd->add_option("--b-grid", sim_opt.b_grid, "threshold exponents");
  sim_cmd->add_option("--k-list", sim_opt.k_list, "neighbor counts");
  sim_cmd->add_option("--k-grid", sim_opt.k_grid, "k values for k-study");
  sim_cmd->add_option("--eta-true", sim_opt.eta_true, "population value");
  sim_cmd->add_option("--param", sim_opt.param, "scenario parameter");
  sim_cmd->add_option("--ni-grid", sim_opt.ni_grid, "per-class sizes");
  sim_cmd->add_option("--n-grid", sim_opt.n_grid, "sample sizes");
  sim_cmd->add_option("--mc-reps", sim_opt.mc_reps, "Monte-Carlo replicates");
  sim_cmd->add_option("--seed", sim_opt.seed, "RNG seed")
      ->each([&](std::string) { sim_opt.seed_set = true; });
  sim_cmd->add_option("--threads", sim_opt.threads, "worker threads");
  sim_cmd->add_option("--out", sim_opt.out_prefix, "output path prefix");

  try {
    app.parse(argc, argv);
    if (*test_cmd) return run_test_like(test_opt, false);
    if (*est_cmd) return run_test_like(est_opt, true);
    if (*pop_cmd) return run_population_eta(model_path);
    if (*const_cmd) return run_constants(const_opt);
    if (*sim_cmd) return run_simulate(sim_opt);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const kmd::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
