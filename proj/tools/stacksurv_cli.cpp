#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "stacksurv/error.hpp"
#include "stacksurv/experiments.hpp"

using namespace stacksurv;

namespace {

struct SimFlags {
  std::string model = "model1";
  std::size_t n = 0;
  std::vector<double> beta;
  double rho = -1, t_max = -1, step_sd = -1;
};

SimConfig resolve_sim(const SimFlags& f) {
  SimConfig c;
  switch (parse_sim_model(f.model)) {
    case SimModel::kModel1: c = SimConfig::model1(); break;
    case SimModel::kModel2: c = SimConfig::model2(); break;
    case SimModel::kTimeVarying: c = SimConfig::time_varying(); break;
  }
  if (f.n) c.n = f.n;
  if (!f.beta.empty()) {
    c.beta = f.beta;
    c.p = f.beta.size();
  }
  if (f.rho >= 0) c.rho_base = f.rho;
  if (f.t_max > 0) c.t_max = f.t_max;
  if (f.step_sd >= 0) c.step_sd = f.step_sd;
  return c;
}

void print_error(const std::string& type, const std::string& message) {
  Json j{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survival analysis by stacking risk sets"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExperimentSpec spec;
  SimFlags sim;
  std::string out_dir = "out";
  std::string learner_json;
  std::string manifest;

  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--model", sim.model, "model1 | model2 | time-varying")->capture_default_str();
    sub->add_option("--n", sim.n, "number of subjects");
    sub->add_option("--beta", sim.beta, "true coefficients (sets p)")->delimiter(',');
    sub->add_option("--rho", sim.rho, "covariate correlation base");
    sub->add_option("--t-max", sim.t_max, "administrative censoring time");
    sub->add_option("--step-sd", sim.step_sd, "random-walk step sd (time-varying)");
    sub->add_option("--seed", spec.seed, "master seed")->capture_default_str();
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  };
  auto add_reps = [&](CLI::App* sub) {
    sub->add_option("--reps", spec.reps, "replicates")->capture_default_str();
  };
  auto add_learners = [&](CLI::App* sub) {
    sub->add_option("--methods", spec.methods, "methods to run")->delimiter(',');
    sub->add_option("--learner-config", learner_json, "JSON file with learner settings");
    sub->add_option("--rf-trees", spec.learners.random_forest.n_trees);
    sub->add_option("--rf-depth", spec.learners.random_forest.max_depth);
    sub->add_option("--rf-min-leaf", spec.learners.random_forest.min_leaf);
    sub->add_option("--rf-mtry", spec.learners.random_forest.mtry, "0 means ceil(p/3)");
    sub->add_option("--rf-seed", spec.learners.random_forest.seed);
    sub->add_option("--gbm-trees", spec.learners.gbm.n_trees);
    sub->add_option("--gbm-depth", spec.learners.gbm.depth);
    sub->add_option("--gbm-shrinkage", spec.learners.gbm.shrinkage);
    sub->add_option("--gbm-min-leaf", spec.learners.gbm.min_leaf);
    sub->add_option("--gbm-seed", spec.learners.gbm.seed);
    sub->add_option("--mlp-hidden", spec.learners.mlp.hidden_units);
    sub->add_option("--mlp-epochs", spec.learners.mlp.epochs);
    sub->add_option("--mlp-rate", spec.learners.mlp.learning_rate);
    sub->add_option("--mlp-seed", spec.learners.mlp.seed);
    sub->add_option("--ls-ridge", spec.learners.least_squares.ridge_epsilon);
    sub->add_option("--level", spec.level, "confidence level")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "write a simulated dataset");
  add_sim(simulate);
  add_common(simulate);

  auto* fit = app.add_subcommand("fit", "fit Cox and stacked logistic models");
  add_sim(fit);
  add_common(fit);
  fit->add_option("--input", spec.input, "CSV input (default: simulate)");
  fit->add_flag("--longitudinal", spec.longitudinal_input, "input is in long format");
  fit->add_option("--methods", spec.methods, "cox,stack-logistic")->delimiter(',');

  auto* coef = app.add_subcommand("compare-coefficients", "Cox vs stacked logistic estimates");
  add_sim(coef);
  add_common(coef);
  add_reps(coef);

  auto* paths = app.add_subcommand("compare-paths", "lasso paths of both fitters");
  add_sim(paths);
  add_common(paths);
  add_reps(paths);
  paths->add_option("--lambda-count", spec.lambda_count)->capture_default_str();
  paths->add_option("--lambda-ratio", spec.lambda_ratio)->capture_default_str();

  auto* curve = app.add_subcommand("curve", "predicted survival curves and ISE");
  add_sim(curve);
  add_common(curve);
  add_reps(curve);
  add_learners(curve);
  curve->add_option("--x-new", spec.x_new, "covariate vector to predict at")->delimiter(',');

  auto* auc = app.add_subcommand("auc", "held-out concordance");
  add_sim(auc);
  add_common(auc);
  add_reps(auc);
  add_learners(auc);
  auc->add_option("--n-test", spec.n_test, "held-out subjects")->capture_default_str();

  auto* equiv = app.add_subcommand("verify-equivalence", "exact vs approximate intercepts");
  add_sim(equiv);
  add_common(equiv);
  equiv->add_option("--input", spec.input, "CSV input (default: simulate)");

  auto* rerun = app.add_subcommand("rerun", "reproduce a run from its manifest");
  rerun->add_option("manifest", manifest, "manifest.json")->required();
  add_common(rerun);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("argument_error", e.what());
    return 2;
  }

  try {
    std::vector<std::string> files;
    if (rerun->parsed()) {
      files = run_manifest(manifest, out_dir);
    } else {
      spec.command = app.get_subcommands().front()->get_name();
      spec.sim = resolve_sim(sim);
      if (!learner_json.empty()) {
        std::ifstream in(learner_json);
        if (!in) throw ArgumentError("cannot open '" + learner_json + "'");
        spec.learners = learner_config_from_json(Json::parse(in), spec.learners);
      }
      files = run_command(spec, out_dir);
    }
    Json j{{"out_dir", out_dir}, {"files", files}};
    std::cout << j.dump() << "\n";
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
