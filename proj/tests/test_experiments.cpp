#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stacksurv/error.hpp"
#include "stacksurv/experiments.hpp"
#include "stacksurv/metrics.hpp"

using namespace stacksurv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stacksurv_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentSpec small_spec(const std::string& command, int reps = 2) {
  ExperimentSpec s;
  s.command = command;
  s.reps = reps;
  s.seed = 12345;
  s.learners.random_forest.n_trees = 20;
  s.learners.gbm.n_trees = 50;
  s.learners.mlp.epochs = 100;
  return s;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("pearson and spearman") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 10, 100, 1000}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 2, 3}) == doctest::Approx(1.0));
  CHECK(std::isnan(pearson({1}, {1})));
}

TEST_CASE("integrated squared error on a hand grid") {
  SurvivalCurve c;
  c.times = {1, 2, 4};
  c.survival = {0.8, 0.5, 0.1};
  // sum of (S - R)^2 * (t_q - t_{q-1})
  const double ise = integrated_squared_error(c, {1, 2, 4}, {0.9, 0.5, 0.3});
  CHECK(ise == doctest::Approx(0.01 * 1 + 0 * 1 + 0.04 * 2));
}

TEST_CASE("replicate seeds are distinct and reproducible") {
  CHECK(replicate_seed(1, 0) == replicate_seed(1, 0));
  CHECK(replicate_seed(1, 0) != replicate_seed(1, 1));
  CHECK(replicate_seed(1, 0) != replicate_seed(2, 0));
  CHECK(test_seed(1, 0) != replicate_seed(1, 0));
}

TEST_CASE("default x_new is 0.5 in every coordinate") {
  ExperimentSpec s;
  CHECK(resolve_x_new(s) == std::vector<double>(6, 0.5));
  s.x_new = {1, 2};
  CHECK_THROWS_AS(resolve_x_new(s), ArgumentError);
}

TEST_CASE("experiment settings JSON round trip") {
  auto s = small_spec("curve");
  s.sim = SimConfig::model2();
  s.methods = {"cox", "stack-rf"};
  s.x_new = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto back = experiment_spec_from_json(to_json(s));
  CHECK(to_json(back).dump() == to_json(s).dump());
}

TEST_CASE("compare-coefficients: ten replicates give sixty pairs") {
  auto s = small_spec("compare-coefficients", 10);
  const auto r = run_compare_coefficients(s);
  CHECK(r.rows.size() == 60);
  CHECK(r.replicates.size() == 10);
  CHECK(r.summary.valid);
  CHECK(r.summary.replicates_ok == 10);
}

TEST_CASE("compare-coefficients: all-censored replicate fails softly") {
  auto s = small_spec("compare-coefficients", 1);
  s.sim.t_max = 1e-12;
  const auto r = run_compare_coefficients(s);
  REQUIRE(r.replicates.size() == 1);
  CHECK_FALSE(r.replicates[0].ok);
  CHECK(r.replicates[0].error.find("censored") != std::string::npos);
  CHECK_FALSE(r.summary.valid);
  CHECK(r.summary.replicates_ok == 0);
  const auto dir = scratch("censored");
  run_command(s, dir);
  const auto j = Json::parse(slurp(dir / "summary.json"));
  CHECK(j["valid"] == false);
  CHECK(j["coefficient_correlation"].is_null());
}

TEST_CASE("compare-coefficients: summary recomputed from the CSV matches") {
  auto s = small_spec("compare-coefficients", 3);
  const auto dir = scratch("coef");
  run_command(s, dir);
  std::vector<CoefficientReport::Row> rows;
  for (const auto& c : read_rows(dir / "coefficients.csv")) {
    REQUIRE(c.size() == 8);
    rows.push_back({std::stoi(c[0]), std::stoul(c[1]) - 1, std::stod(c[2]), std::stod(c[3]),
                    std::stod(c[4]), std::stod(c[5]), std::stod(c[6]), std::stod(c[7])});
  }
  CHECK(rows.size() == 18);
  std::vector<double> a, b;
  double maxdiff = 0;
  for (const auto& r : rows) {
    a.push_back(r.cox);
    b.push_back(r.logistic);
    maxdiff = std::max(maxdiff, std::abs(r.cox - r.logistic));
  }
  const auto j = Json::parse(slurp(dir / "summary.json"));
  CHECK(j["coefficient_correlation"].get<double>() == doctest::Approx(pearson(a, b)).epsilon(1e-14));
  CHECK(j["max_abs_difference"].get<double>() == maxdiff);
  const auto summary = summarize_coefficients(rows, 3);
  CHECK(j["p_value_rank_correlation"].get<double>() == summary.p_value_rank_correlation);
}

TEST_CASE("compare-paths reports sign agreement") {
  auto s = small_spec("compare-paths", 1);
  s.lambda_count = 10;
  const auto r = run_compare_paths(s);
  CHECK(r.points == 60);
  CHECK(r.agreement() > 0.8);
}

TEST_CASE("curve experiment: null learner equals Kaplan-Meier and truth is included") {
  auto s = small_spec("curve", 2);
  s.methods = {"cox", "stack-null", "stack-ls"};
  const auto r = run_curve_experiment(s);
  CHECK(r.km_max_abs_difference <= 1e-12);
  int truth = 0;
  for (const auto& e : r.curves) truth += e.method == "truth";
  CHECK(truth == 2);
  CHECK(r.mean_gap_vs_cox().at("cox") == 0.0);
  CHECK(r.mean_ise().size() == 3);
}

TEST_CASE("curve experiment rejects the time-varying design") {
  auto s = small_spec("curve", 1);
  s.sim = SimConfig::time_varying();
  CHECK_THROWS_AS(run_curve_experiment(s), ArgumentError);
}

TEST_CASE("auc experiment: values in range and equal rows when orders agree") {
  auto s = small_spec("auc", 4);
  s.methods = {"cox", "stack-logistic"};
  const auto r = run_auc_experiment(s);
  REQUIRE(r.agreement.size() == 4);
  for (const auto& row : r.rows)
    if (!std::isnan(row.c_index)) {
      CHECK(row.c_index >= 0.0);
      CHECK(row.c_index <= 1.0);
    }
  for (const auto& a : r.agreement) {
    if (!a.orders_agree) continue;
    for (const auto& src : {"linear_predictor", "one_minus_midpoint_survival", "negative_curve_area"}) {
      double cox = NAN, logit = NAN;
      for (const auto& row : r.rows)
        if (row.replicate == a.replicate && row.source == src) {
          if (row.method == "cox") cox = row.c_index;
          if (row.method == "stack-logistic") logit = row.c_index;
        }
      CHECK(cox == logit);
    }
  }
}

TEST_CASE("auc experiment: the oracle dominates on large test sets") {
  auto s = small_spec("auc", 3);
  s.methods = {"cox", "stack-logistic", "stack-rf"};
  s.n_test = 2000;
  const auto means = run_auc_experiment(s).means();
  const double oracle = means.at("oracle/true_rate");
  for (const auto& [k, v] : means)
    if (k != "oracle/true_rate") CHECK(oracle > v);
}

TEST_CASE("auc experiment with two test subjects") {
  auto s = small_spec("auc", 6);
  s.methods = {"cox"};
  s.n_test = 2;
  const auto r = run_auc_experiment(s);
  CHECK(r.replicates.size() == 6);
  for (const auto& row : r.rows)
    CHECK((std::isnan(row.c_index) || row.c_index == 0.0 || row.c_index == 1.0));
}

TEST_CASE("verify-equivalence writes one row per event") {
  auto s = small_spec("verify-equivalence");
  const auto r = run_verify_equivalence(s);
  CHECK(r.fit.converged);
  CHECK(!r.rows.empty());
}

TEST_CASE("every command reruns from its manifest to identical bytes") {
  for (const char* cmd : {"simulate", "fit", "compare-coefficients", "compare-paths", "curve", "auc",
                          "verify-equivalence"}) {
    auto s = small_spec(cmd, 1);
    if (std::string(cmd) == "curve" || std::string(cmd) == "auc") s.methods = {"cox", "stack-rf", "stack-mlp"};
    if (std::string(cmd) == "compare-paths") s.lambda_count = 5;
    const auto a = scratch(std::string("a_") + cmd);
    const auto b = scratch(std::string("b_") + cmd);
    const auto files = run_command(s, a);
    const auto again = run_manifest(a / "manifest.json", b);
    REQUIRE(files == again);
    for (const auto& f : files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), cmd << "/" << f);
    const auto m = Json::parse(slurp(a / "manifest.json"));
    CHECK(m["version"] == kVersion);
    CHECK(m["seed"] == s.seed);
  }
}

TEST_CASE("fit reads a CSV input and reports warnings") {
  const auto dir = scratch("fit_input");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "in.csv");
    out << "time,status,a,b\n1,1,0.1,1\n2,1,0.5,1\n2,1,-0.3,1\n3,0,0.2,1\n4,1,0.9,1\n";
  }
  auto s = small_spec("fit");
  s.input = (dir / "in.csv").string();
  s.methods = {"cox"};
  CHECK_THROWS_AS(run_command(s, dir / "out"), NumericalError);
}

TEST_CASE("unknown command and bad manifest") {
  auto s = small_spec("nope");
  CHECK_THROWS_AS(run_command(s, scratch("nope")), ArgumentError);
  const auto dir = scratch("badmanifest");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.json");
    out << "{not json";
  }
  CHECK_THROWS_AS(run_manifest(dir / "manifest.json", dir / "out"), ParseError);
}

}
