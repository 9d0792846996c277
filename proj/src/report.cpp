#include "stacksurv/report.hpp"

#include <cmath>

#include "stacksurv/error.hpp"

namespace stacksurv {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace {

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

Json coefficient_table(const Eigen::VectorXd& coef, const Eigen::VectorXd& se,
                       const Eigen::VectorXd& z, const Eigen::VectorXd& p,
                       const std::vector<std::string>& names) {
  Json rows = Json::array();
  for (Eigen::Index k = 0; k < coef.size(); ++k) {
    Json r;
    r["name"] = static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)]
                                                           : "x" + std::to_string(k + 1);
    r["coefficient"] = number_or_null(coef(k));
    r["std_error"] = number_or_null(se(k));
    r["z"] = number_or_null(z(k));
    r["p_value"] = number_or_null(p(k));
    rows.push_back(std::move(r));
  }
  return rows;
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json to_json(const FitResult& fit, const std::vector<std::string>& names) {
  Json j;
  j["model"] = "cox";
  j["coefficients"] = coefficient_table(fit.coefficients, fit.std_errors, fit.z_scores,
                                        fit.p_values, names);
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"log_likelihood", number_or_null(fit.log_likelihood)},
                      {"message", fit.message}};
  return j;
}

Json to_json(const LogisticFit& fit, const std::vector<std::string>& names) {
  Json j;
  j["model"] = "stacked_logistic";
  j["coefficients"] = coefficient_table(fit.coefficients, fit.std_errors, fit.z_scores,
                                        fit.p_values, names);
  j["intercepts"] = vec(fit.intercepts);
  Json dropped = Json::array();
  for (std::size_t q = 0; q < fit.dropped.size(); ++q)
    if (fit.dropped[q]) dropped.push_back(q + 1);
  j["dropped_strata"] = dropped;
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"log_likelihood", number_or_null(fit.log_likelihood)},
                      {"deviance", number_or_null(fit.deviance)}};
  j["warnings"] = fit.warnings;
  return j;
}

Json to_json(const PenalizedPath& path) {
  Json j;
  j["lambda"] = path.lambda_grid;
  Json coefs = Json::array();
  for (const auto& c : path.coefficients) coefs.push_back(vec(c));
  j["coefficients"] = coefs;
  j["iterations"] = path.iterations;
  return j;
}

Json to_json(const SimConfig& c) {
  return {{"model", to_string(c.model)}, {"n", c.n},           {"p", c.p},
          {"beta", c.beta},              {"rho_base", c.rho_base}, {"t_max", c.t_max},
          {"step_sd", c.step_sd},        {"seed", c.seed}};
}

SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  if (j.contains("model")) {
    const auto model = parse_sim_model(j.at("model").get<std::string>());
    c = model == SimModel::kModel1   ? SimConfig::model1()
        : model == SimModel::kModel2 ? SimConfig::model2()
                                     : SimConfig::time_varying();
  } else {
    c = SimConfig::model1();
  }
  read(j, "n", c.n);
  read(j, "p", c.p);
  read(j, "beta", c.beta);
  read(j, "rho_base", c.rho_base);
  read(j, "t_max", c.t_max);
  read(j, "step_sd", c.step_sd);
  read(j, "seed", c.seed);
  return c;
}

Json to_json(const LearnerConfig& c) {
  return {{"least_squares", {{"ridge_epsilon", c.least_squares.ridge_epsilon}}},
          {"random_forest",
           {{"n_trees", c.random_forest.n_trees},
            {"max_depth", c.random_forest.max_depth},
            {"min_leaf", c.random_forest.min_leaf},
            {"mtry", c.random_forest.mtry},
            {"seed", c.random_forest.seed}}},
          {"gbm",
           {{"n_trees", c.gbm.n_trees},
            {"depth", c.gbm.depth},
            {"shrinkage", c.gbm.shrinkage},
            {"min_leaf", c.gbm.min_leaf},
            {"seed", c.gbm.seed}}},
          {"mlp",
           {{"hidden_units", c.mlp.hidden_units},
            {"epochs", c.mlp.epochs},
            {"learning_rate", c.mlp.learning_rate},
            {"seed", c.mlp.seed}}}};
}

LearnerConfig learner_config_from_json(const Json& j, LearnerConfig c) {
  if (!j.is_object()) throw ArgumentError("learner configuration must be a JSON object");
  if (j.contains("least_squares")) read(j["least_squares"], "ridge_epsilon", c.least_squares.ridge_epsilon);
  if (j.contains("random_forest")) {
    const auto& r = j["random_forest"];
    read(r, "n_trees", c.random_forest.n_trees);
    read(r, "max_depth", c.random_forest.max_depth);
    read(r, "min_leaf", c.random_forest.min_leaf);
    read(r, "mtry", c.random_forest.mtry);
    read(r, "seed", c.random_forest.seed);
  }
  if (j.contains("gbm")) {
    const auto& g = j["gbm"];
    read(g, "n_trees", c.gbm.n_trees);
    read(g, "depth", c.gbm.depth);
    read(g, "shrinkage", c.gbm.shrinkage);
    read(g, "min_leaf", c.gbm.min_leaf);
    read(g, "seed", c.gbm.seed);
  }
  if (j.contains("mlp")) {
    const auto& m = j["mlp"];
    read(m, "hidden_units", c.mlp.hidden_units);
    read(m, "epochs", c.mlp.epochs);
    read(m, "learning_rate", c.mlp.learning_rate);
    read(m, "seed", c.mlp.seed);
  }
  c.check();
  return c;
}

}  // namespace stacksurv
