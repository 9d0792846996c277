#include "stacksurv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "stacksurv/coxph.hpp"
#include "stacksurv/error.hpp"
#include "stacksurv/metrics.hpp"
#include "stacksurv/stacker.hpp"

namespace stacksurv {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kCurveMethods = {"cox",       "stack-ls",  "stack-logistic",
                                                "stack-rf",  "stack-gbm", "stack-mlp",
                                                "stack-null"};
const std::vector<std::string> kAucMethods = {"cox", "stack-logistic", "stack-rf", "stack-gbm",
                                              "stack-mlp"};

std::string canonical_method(const std::string& m) {
  if (m == "stacked-logistic" || m == "logistic") return "stack-logistic";
  if (m == "null" || m == "km") return "stack-null";
  if (m == "ls") return "stack-ls";
  if (m == "rf") return "stack-rf";
  if (m == "gbm") return "stack-gbm";
  if (m == "mlp") return "stack-mlp";
  return m;
}

std::vector<std::string> methods_or(const ExperimentSpec& spec, const std::vector<std::string>& def) {
  std::vector<std::string> out;
  for (const auto& m : spec.methods.empty() ? def : spec.methods) out.push_back(canonical_method(m));
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

SimConfig replicate_config(const ExperimentSpec& spec, int r) {
  SimConfig c = spec.sim;
  c.seed = replicate_seed(spec.seed, r);
  return c;
}

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

// A fitted survival method that can draw a curve for any covariate vector.
class FittedMethod {
 public:
  virtual ~FittedMethod() = default;
  virtual SurvivalCurve curve(std::span<const double> x) const = 0;
  // Linear risk score when the method has one.
  virtual bool linear_predictor(std::span<const double>, double&) const { return false; }
};

double dot(const Eigen::VectorXd& beta, std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), beta.size()).dot(beta);
}

class CoxMethod final : public FittedMethod {
 public:
  CoxMethod(const SurvivalDataset& data, double level) : data_(data), level_(level) {
    fit_ = cox_fit(data_);
    if (!fit_.converged) throw NumericalError("cox fit did not converge: " + fit_.message);
  }
  SurvivalCurve curve(std::span<const double> x) const override {
    return cox_survival_curve(fit_, data_, x, level_);
  }
  bool linear_predictor(std::span<const double> x, double& out) const override {
    out = dot(fit_.coefficients, x);
    return true;
  }

 private:
  const SurvivalDataset& data_;
  double level_;
  FitResult fit_;
};

class LogisticMethod final : public FittedMethod {
 public:
  LogisticMethod(const StackedData& stacked, double level) : stacked_(stacked), level_(level) {
    fit_ = logistic_fit(stacked_);
    if (!fit_.converged) throw NumericalError("stacked logistic fit did not converge");
  }
  SurvivalCurve curve(std::span<const double> x) const override {
    return logistic_survival_curve(fit_, stacked_, x, level_);
  }
  bool linear_predictor(std::span<const double> x, double& out) const override {
    out = dot(fit_.coefficients, x);
    return true;
  }

 private:
  const StackedData& stacked_;
  double level_;
  LogisticFit fit_;
};

class LearnerMethod final : public FittedMethod {
 public:
  LearnerMethod(const StackedData& centered, const Learner& learner, double level)
      : centered_(centered), level_(level), model_(learner.fit(centered.design, centered.response)) {}
  SurvivalCurve curve(std::span<const double> x) const override {
    return predict_survival_curve(*model_, centered_, x, level_);
  }

 private:
  const StackedData& centered_;
  double level_;
  std::unique_ptr<Model> model_;
};

// Training data with lazily built stacks shared by all methods.
struct Training {
  SurvivalDataset data;
  std::unique_ptr<StackedData> indicator;
  std::unique_ptr<StackedData> centered;

  const StackedData& stacked() {
    if (!indicator) indicator = std::make_unique<StackedData>(stack(data));
    return *indicator;
  }
  const StackedData& centered_stack() {
    if (!centered) centered = std::make_unique<StackedData>(center(stacked()));
    return *centered;
  }
};

std::unique_ptr<FittedMethod> fit_method(const std::string& method, Training& t,
                                         const ExperimentSpec& spec) {
  if (method == "cox") return std::make_unique<CoxMethod>(t.data, spec.level);
  if (method == "stack-logistic") return std::make_unique<LogisticMethod>(t.stacked(), spec.level);
  if (method.rfind("stack-", 0) == 0) {
    const auto learner = make_learner(method.substr(6), spec.learners);
    return std::make_unique<LearnerMethod>(t.centered_stack(), *learner, spec.level);
  }
  throw ArgumentError("unknown method '" + method + "'");
}

void require_data_events(const SurvivalDataset& d) {
  if (!d.has_event()) throw ArgumentError("all records censored: nothing to fit");
}

// Average ranks, 1-based.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw ArgumentError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) { return format_double(v); }

std::string replicates_csv(const std::vector<ReplicateStatus>& reps) {
  std::ostringstream os;
  os << "replicate,seed,ok,error\n";
  for (const auto& r : reps) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.replicate << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << err << '\n';
  }
  return os.str();
}

template <class Fn>
ReplicateStatus guarded(int r, std::uint64_t seed, Fn&& fn) {
  ReplicateStatus st{r, seed, true, {}};
  try {
    fn();
  } catch (const std::exception& e) {
    st.ok = false;
    st.error = e.what();
  }
  return st;
}

}  // namespace

Json to_json(const ExperimentSpec& s) {
  Json j;
  j["command"] = s.command;
  j["sim"] = to_json(s.sim);
  j["learners"] = to_json(s.learners);
  j["methods"] = s.methods;
  j["seed"] = s.seed;
  j["reps"] = s.reps;
  j["n_test"] = s.n_test;
  j["x_new"] = s.x_new;
  j["lambda_count"] = s.lambda_count;
  j["lambda_ratio"] = s.lambda_ratio;
  j["level"] = s.level;
  j["input"] = s.input;
  j["longitudinal_input"] = s.longitudinal_input;
  return j;
}

ExperimentSpec experiment_spec_from_json(const Json& j) {
  ExperimentSpec s;
  s.command = j.at("command").get<std::string>();
  if (j.contains("sim")) s.sim = sim_config_from_json(j.at("sim"));
  if (j.contains("learners")) s.learners = learner_config_from_json(j.at("learners"));
  if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("reps")) s.reps = j.at("reps").get<int>();
  if (j.contains("n_test")) s.n_test = j.at("n_test").get<std::size_t>();
  if (j.contains("x_new")) s.x_new = j.at("x_new").get<std::vector<double>>();
  if (j.contains("lambda_count")) s.lambda_count = j.at("lambda_count").get<int>();
  if (j.contains("lambda_ratio")) s.lambda_ratio = j.at("lambda_ratio").get<double>();
  if (j.contains("level")) s.level = j.at("level").get<double>();
  if (j.contains("input")) s.input = j.at("input").get<std::string>();
  if (j.contains("longitudinal_input")) s.longitudinal_input = j.at("longitudinal_input").get<bool>();
  return s;
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  return RandomStream(seed).split(static_cast<std::uint64_t>(replicate)).next();
}

std::uint64_t test_seed(std::uint64_t seed, int replicate) {
  return RandomStream(seed).split(static_cast<std::uint64_t>(replicate)).split(1).next();
}

std::vector<double> resolve_x_new(const ExperimentSpec& spec) {
  if (spec.x_new.empty()) return std::vector<double>(spec.sim.p, 0.5);
  if (spec.x_new.size() != spec.sim.p) throw ArgumentError("x_new length must equal p");
  return spec.x_new;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return kNaN;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// ---------------------------------------------------------------------------
// Coefficients

CoefficientReport::Summary summarize_coefficients(const std::vector<CoefficientReport::Row>& rows,
                                                  std::size_t replicates_ok) {
  CoefficientReport::Summary s;
  s.replicates_ok = replicates_ok;
  s.valid = replicates_ok > 0 && !rows.empty();
  if (!s.valid) {
    s.coefficient_correlation = s.max_abs_difference = s.p_value_rank_correlation = kNaN;
    return s;
  }
  std::vector<double> cox, logit, cp, lp;
  for (const auto& r : rows) {
    cox.push_back(r.cox);
    logit.push_back(r.logistic);
    cp.push_back(r.cox_p);
    lp.push_back(r.logistic_p);
    s.max_abs_difference = std::max(s.max_abs_difference, std::abs(r.cox - r.logistic));
  }
  s.coefficient_correlation = pearson(cox, logit);
  s.p_value_rank_correlation = spearman(cp, lp);
  return s;
}

CoefficientReport run_compare_coefficients(const ExperimentSpec& spec) {
  CoefficientReport report;
  std::size_t ok = 0;
  for (int r = 0; r < spec.reps; ++r) {
    const SimConfig cfg = replicate_config(spec, r);
    std::vector<CoefficientReport::Row> rows;
    auto st = guarded(r, cfg.seed, [&] {
      FitResult cox;
      LogisticFit logit;
      if (cfg.model == SimModel::kTimeVarying) {
        const auto data = simulate_longitudinal(cfg);
        cox = cox_fit(data);
        logit = logistic_fit(stack_time_varying(data));
      } else {
        const auto data = simulate(cfg);
        require_data_events(data);
        cox = cox_fit(data);
        logit = logistic_fit(stack(data));
      }
      if (!cox.converged) throw NumericalError("cox fit did not converge: " + cox.message);
      if (!logit.converged) throw NumericalError("stacked logistic fit did not converge");
      for (Eigen::Index k = 0; k < cox.coefficients.size(); ++k)
        rows.push_back({r, static_cast<std::size_t>(k), cox.coefficients(k), logit.coefficients(k),
                        cox.std_errors(k), logit.std_errors(k), cox.p_values(k), logit.p_values(k)});
    });
    if (st.ok) {
      ++ok;
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
    report.replicates.push_back(st);
  }
  report.summary = summarize_coefficients(report.rows, ok);
  return report;
}

// ---------------------------------------------------------------------------
// Penalized paths

PathReport run_compare_paths(const ExperimentSpec& spec) {
  PathReport report;
  for (int r = 0; r < spec.reps; ++r) {
    const SimConfig cfg = replicate_config(spec, r);
    std::vector<PathReport::Row> rows;
    auto st = guarded(r, cfg.seed, [&] {
      if (cfg.model == SimModel::kTimeVarying)
        throw ArgumentError("compare-paths supports static designs only");
      const auto data = simulate(cfg);
      require_data_events(data);
      const auto design = CoxDesign::from(data);
      const auto grid = lambda_grid(cox_lambda_max(design), spec.lambda_count, spec.lambda_ratio);
      const auto cox = cox_fit_l1(design, grid);
      const auto logit = logistic_fit_l1(stack(data), grid);
      for (std::size_t l = 0; l < grid.size(); ++l)
        for (Eigen::Index k = 0; k < cox.coefficients[l].size(); ++k)
          rows.push_back({r, l, grid[l], static_cast<std::size_t>(k), cox.coefficients[l](k),
                          logit.coefficients[l](k)});
    });
    if (st.ok) {
      for (const auto& row : rows) {
        ++report.points;
        const auto sign = [](double v) { return (v > 0) - (v < 0); };
        if (sign(row.cox) == sign(row.logistic)) ++report.sign_agreements;
      }
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
    report.replicates.push_back(st);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Curves

double integrated_squared_error(const SurvivalCurve& curve, const std::vector<double>& grid,
                                const std::vector<double>& reference) {
  if (grid.size() != reference.size()) throw ArgumentError("ISE: grid and reference differ");
  double ise = 0.0, prev = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const double d = curve.at(grid[q]) - reference[q];
    ise += d * d * (grid[q] - prev);
    prev = grid[q];
  }
  return ise;
}

std::map<std::string, double> CurveReport::mean_ise() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : scores) {
    acc[s.method].first += s.ise;
    acc[s.method].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [m, v] : acc) out[m] = v.first / v.second;
  return out;
}

std::map<std::string, double> CurveReport::mean_gap_vs_cox() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : scores)
    if (!std::isnan(s.mean_abs_gap_vs_cox)) {
      acc[s.method].first += s.mean_abs_gap_vs_cox;
      acc[s.method].second += 1;
    }
  std::map<std::string, double> out;
  for (const auto& [m, v] : acc) out[m] = v.first / v.second;
  return out;
}

CurveReport run_curve_experiment(const ExperimentSpec& spec) {
  if (spec.sim.model == SimModel::kTimeVarying)
    throw ArgumentError("curve experiments need a static design with a known true curve");
  const auto methods = methods_or(spec, kCurveMethods);
  CurveReport report;
  report.x_new = resolve_x_new(spec);
  report.km_max_abs_difference = has(methods, "stack-null") ? 0.0 : kNaN;
  const auto x = as_span(report.x_new);

  for (int r = 0; r < spec.reps; ++r) {
    const SimConfig cfg = replicate_config(spec, r);
    std::vector<CurveReport::Entry> entries;
    std::vector<CurveReport::Score> scores;
    double km_diff = 0.0;
    auto st = guarded(r, cfg.seed, [&] {
      Training t{simulate(cfg), nullptr, nullptr};
      require_data_events(t.data);
      const auto km = kaplan_meier(t.data, spec.level);
      const std::vector<double>& grid = km.times;
      std::vector<double> truth;
      for (double time : grid) truth.push_back(true_survival(cfg, x, time));
      SurvivalCurve truth_curve;
      truth_curve.times = grid;
      truth_curve.survival = truth;
      entries.push_back({r, "truth", truth_curve});

      std::unique_ptr<SurvivalCurve> cox_curve;
      for (const auto& m : methods) {
        auto fitted = fit_method(m, t, spec);
        auto c = fitted->curve(x);
        if (m == "cox") cox_curve = std::make_unique<SurvivalCurve>(c);
        if (m == "stack-null") {
          for (double time : grid) km_diff = std::max(km_diff, std::abs(c.at(time) - km.at(time)));
          for (std::size_t q = 0; q < c.size() && q < km.size(); ++q)
            km_diff = std::max(km_diff, std::abs(c.std_errors[q] - km.std_errors[q]));
        }
        entries.push_back({r, m, std::move(c)});
      }
      for (const auto& e : entries) {
        if (e.method == "truth") continue;
        CurveReport::Score s{r, e.method, integrated_squared_error(e.curve, grid, truth), kNaN,
                             e.curve.clamped_fraction()};
        if (cox_curve) {
          double gap = 0.0;
          for (double time : grid) gap += std::abs(e.curve.at(time) - cox_curve->at(time));
          s.mean_abs_gap_vs_cox = gap / static_cast<double>(grid.size());
        }
        scores.push_back(s);
      }
    });
    if (st.ok) {
      for (auto& e : entries) report.curves.push_back(std::move(e));
      report.scores.insert(report.scores.end(), scores.begin(), scores.end());
      if (!std::isnan(report.km_max_abs_difference))
        report.km_max_abs_difference = std::max(report.km_max_abs_difference, km_diff);
    }
    report.replicates.push_back(st);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Concordance

std::map<std::string, double> AucReport::means() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& row : rows)
    if (!std::isnan(row.c_index)) {
      auto& a = acc[row.method + "/" + row.source];
      a.first += row.c_index;
      a.second += 1;
    }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

AucReport run_auc_experiment(const ExperimentSpec& spec) {
  if (spec.sim.model == SimModel::kTimeVarying)
    throw ArgumentError("auc experiments need a static design");
  const auto methods = methods_or(spec, kAucMethods);
  AucReport report;
  for (int r = 0; r < spec.reps; ++r) {
    const SimConfig cfg = replicate_config(spec, r);
    std::vector<AucReport::Row> rows;
    AucReport::Agreement agreement{r, false, kNaN, kNaN};
    bool have_agreement = false;
    auto st = guarded(r, cfg.seed, [&] {
      Training t{simulate(cfg), nullptr, nullptr};
      require_data_events(t.data);
      SimConfig test_cfg = cfg;
      test_cfg.n = std::max<std::size_t>(spec.n_test, 2);
      test_cfg.seed = test_seed(spec.seed, r);
      const auto test = simulate(test_cfg);
      std::vector<double> times;
      for (const auto& rec : test.records()) times.push_back(rec.time);
      const auto status = test.statuses();

      auto score = [&](const std::string& method, const std::string& source,
                       const std::vector<double>& risks) {
        double c = kNaN;
        try {
          c = c_index(times, status, risks);
        } catch (const UndefinedMetric&) {
        }
        rows.push_back({r, method, source, c});
        return c;
      };

      std::vector<double> oracle;
      for (const auto& rec : test.records()) oracle.push_back(true_rate(cfg, as_span(rec.covariates)));
      score("oracle", "true_rate", oracle);

      std::map<std::string, std::vector<double>> lp;
      std::map<std::string, double> midpoint_c;
      for (const auto& m : methods) {
        auto fitted = fit_method(m, t, spec);
        std::vector<double> mid, area, lin;
        for (const auto& rec : test.records()) {
          const auto x = as_span(rec.covariates);
          const auto curve = fitted->curve(x);
          mid.push_back(risk_from_midpoint(curve));
          area.push_back(risk_from_area(curve));
          double eta = 0.0;
          if (fitted->linear_predictor(x, eta)) lin.push_back(eta);
        }
        midpoint_c[m] = score(m, to_string(RiskSource::kOneMinusMidpointSurvival), mid);
        score(m, to_string(RiskSource::kNegativeCurveArea), area);
        if (!lin.empty()) {
          score(m, to_string(RiskSource::kLinearPredictor), lin);
          lp[m] = std::move(lin);
        }
      }
      if (lp.count("cox") && lp.count("stack-logistic")) {
        const auto& a = lp["cox"];
        const auto& b = lp["stack-logistic"];
        bool agree = true;
        for (std::size_t i = 0; i < a.size() && agree; ++i)
          for (std::size_t j = i + 1; j < a.size(); ++j)
            if ((a[i] < a[j]) != (b[i] < b[j]) || (a[i] == a[j]) != (b[i] == b[j])) {
              agree = false;
              break;
            }
        agreement = {r, agree, midpoint_c["cox"], midpoint_c["stack-logistic"]};
        have_agreement = true;
      }
    });
    if (st.ok) {
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      if (have_agreement) report.agreement.push_back(agreement);
    }
    report.replicates.push_back(st);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Equivalence check

EquivalenceReport run_verify_equivalence(const ExperimentSpec& spec) {
  SurvivalDataset data;
  if (!spec.input.empty()) {
    data = load_csv(spec.input);
  } else {
    SimConfig cfg = spec.sim;
    cfg.seed = spec.seed;
    data = simulate(cfg);
  }
  require_data_events(data);
  EquivalenceReport report;
  report.fit = cox_fit(data);
  report.rows = verify_equivalence(data, report.fit.coefficients);
  return report;
}

// ---------------------------------------------------------------------------
// Command dispatch

namespace {

std::string summary_json(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> write_simulate(const ExperimentSpec& spec, const fs::path& dir) {
  SimConfig cfg = spec.sim;
  cfg.seed = spec.seed;
  std::ostringstream os;
  std::string name;
  if (cfg.model == SimModel::kTimeVarying) {
    write_longitudinal_csv(os, simulate_longitudinal(cfg));
    name = "longitudinal.csv";
  } else {
    write_csv(os, simulate(cfg));
    name = "dataset.csv";
  }
  write_atomic(dir / name, os.str());
  write_atomic(dir / "config.json", summary_json(to_json(cfg)));
  return {name, "config.json"};
}

std::vector<std::string> write_fit(const ExperimentSpec& spec, const fs::path& dir) {
  const auto methods = methods_or(spec, {"cox", "stack-logistic"});
  Json out;
  if (spec.longitudinal_input || (spec.input.empty() && spec.sim.model == SimModel::kTimeVarying)) {
    LongitudinalDataset data;
    if (!spec.input.empty()) {
      data = load_longitudinal_csv(spec.input);
    } else {
      SimConfig cfg = spec.sim;
      cfg.seed = spec.seed;
      data = simulate_longitudinal(cfg);
    }
    for (const auto& m : methods) {
      if (m == "cox") out["cox"] = to_json(cox_fit(data), data.feature_names());
      else if (m == "stack-logistic")
        out["stack-logistic"] = to_json(logistic_fit(stack_time_varying(data)), data.feature_names());
      else throw ArgumentError("fit supports methods cox and stack-logistic");
    }
  } else {
    SurvivalDataset data;
    if (!spec.input.empty()) {
      data = load_csv(spec.input);
    } else {
      SimConfig cfg = spec.sim;
      cfg.seed = spec.seed;
      data = simulate(cfg);
    }
    out["warnings"] = validate(data);
    require_data_events(data);
    for (const auto& m : methods) {
      if (m == "cox") out["cox"] = to_json(cox_fit(data), data.feature_names());
      else if (m == "stack-logistic")
        out["stack-logistic"] = to_json(logistic_fit(stack(data)), data.feature_names());
      else throw ArgumentError("fit supports methods cox and stack-logistic");
    }
  }
  write_atomic(dir / "fit.json", summary_json(out));
  return {"fit.json"};
}

std::vector<std::string> write_coefficients(const ExperimentSpec& spec, const fs::path& dir) {
  const auto rep = run_compare_coefficients(spec);
  std::ostringstream os;
  os << "replicate,coefficient,cox,logistic,cox_se,logistic_se,cox_p,logistic_p\n";
  for (const auto& r : rep.rows)
    os << r.replicate << ',' << r.coefficient + 1 << ',' << fmt(r.cox) << ',' << fmt(r.logistic)
       << ',' << fmt(r.cox_se) << ',' << fmt(r.logistic_se) << ',' << fmt(r.cox_p) << ','
       << fmt(r.logistic_p) << '\n';
  write_atomic(dir / "coefficients.csv", os.str());
  write_atomic(dir / "replicates.csv", replicates_csv(rep.replicates));
  const auto& s = rep.summary;
  Json j{{"replicates", spec.reps},
         {"replicates_ok", s.replicates_ok},
         {"valid", s.valid},
         {"coefficient_correlation", number_or_null(s.coefficient_correlation)},
         {"max_abs_difference", number_or_null(s.max_abs_difference)},
         {"p_value_rank_correlation", number_or_null(s.p_value_rank_correlation)}};
  write_atomic(dir / "summary.json", summary_json(j));
  return {"coefficients.csv", "replicates.csv", "summary.json"};
}

std::vector<std::string> write_paths(const ExperimentSpec& spec, const fs::path& dir) {
  const auto rep = run_compare_paths(spec);
  std::ostringstream os;
  os << "replicate,lambda_index,lambda,coefficient,cox,logistic\n";
  for (const auto& r : rep.rows)
    os << r.replicate << ',' << r.lambda_index + 1 << ',' << fmt(r.lambda) << ','
       << r.coefficient + 1 << ',' << fmt(r.cox) << ',' << fmt(r.logistic) << '\n';
  write_atomic(dir / "paths.csv", os.str());
  write_atomic(dir / "replicates.csv", replicates_csv(rep.replicates));
  Json j{{"points", rep.points},
         {"sign_agreements", rep.sign_agreements},
         {"sign_agreement_fraction", number_or_null(rep.agreement())}};
  write_atomic(dir / "summary.json", summary_json(j));
  return {"paths.csv", "replicates.csv", "summary.json"};
}

std::vector<std::string> write_curves(const ExperimentSpec& spec, const fs::path& dir) {
  const auto rep = run_curve_experiment(spec);
  std::ostringstream os;
  os << "replicate,method,t,survival,sd,lower,upper,hazard_raw,hazard_clamped\n";
  for (const auto& e : rep.curves) {
    const auto& c = e.curve;
    for (std::size_t q = 0; q < c.size(); ++q) {
      os << e.replicate << ',' << e.method << ',' << fmt(c.times[q]) << ',' << fmt(c.survival[q]);
      if (e.method == "truth") {
        os << ",,,,,\n";
        continue;
      }
      os << ',' << fmt(c.std_errors[q]) << ',' << fmt(c.lower[q]) << ',' << fmt(c.upper[q]) << ','
         << fmt(c.hazard_raw[q]) << ',' << fmt(c.hazard[q]) << '\n';
    }
  }
  write_atomic(dir / "curves.csv", os.str());
  std::ostringstream ss;
  ss << "replicate,method,ise,mean_abs_gap_vs_cox,clamped_fraction\n";
  for (const auto& s : rep.scores)
    ss << s.replicate << ',' << s.method << ',' << fmt(s.ise) << ',' << fmt(s.mean_abs_gap_vs_cox)
       << ',' << fmt(s.clamped_fraction) << '\n';
  write_atomic(dir / "scores.csv", ss.str());
  write_atomic(dir / "replicates.csv", replicates_csv(rep.replicates));
  Json mean_ise, mean_gap;
  for (const auto& [m, v] : rep.mean_ise()) mean_ise[m] = number_or_null(v);
  for (const auto& [m, v] : rep.mean_gap_vs_cox()) mean_gap[m] = number_or_null(v);
  Json j{{"x_new", rep.x_new},
         {"mean_ise", mean_ise},
         {"mean_abs_gap_vs_cox", mean_gap},
         {"null_vs_kaplan_meier_max_abs_difference", number_or_null(rep.km_max_abs_difference)}};
  write_atomic(dir / "summary.json", summary_json(j));
  return {"curves.csv", "scores.csv", "replicates.csv", "summary.json"};
}

std::vector<std::string> write_auc(const ExperimentSpec& spec, const fs::path& dir) {
  const auto rep = run_auc_experiment(spec);
  std::ostringstream os;
  os << "replicate,method,source,c_index\n";
  for (const auto& r : rep.rows)
    os << r.replicate << ',' << r.method << ',' << r.source << ',' << fmt(r.c_index) << '\n';
  write_atomic(dir / "auc.csv", os.str());
  std::ostringstream as;
  as << "replicate,orders_agree,cox_c_index,logistic_c_index\n";
  for (const auto& a : rep.agreement)
    as << a.replicate << ',' << (a.orders_agree ? 1 : 0) << ',' << fmt(a.cox) << ','
       << fmt(a.logistic) << '\n';
  write_atomic(dir / "agreement.csv", as.str());
  write_atomic(dir / "replicates.csv", replicates_csv(rep.replicates));
  Json table;
  for (const auto& [k, v] : rep.means()) table[k] = number_or_null(v);
  Json j{{"n_test", spec.n_test}, {"mean_c_index", table}};
  write_atomic(dir / "summary.json", summary_json(j));
  return {"auc.csv", "agreement.csv", "replicates.csv", "summary.json"};
}

std::vector<std::string> write_equivalence(const ExperimentSpec& spec, const fs::path& dir) {
  const auto rep = run_verify_equivalence(spec);
  std::ostringstream os;
  write_equivalence_csv(os, rep.rows);
  write_atomic(dir / "equivalence.csv", os.str());
  write_atomic(dir / "fit.json", summary_json(to_json(rep.fit)));
  return {"equivalence.csv", "fit.json"};
}

}  // namespace

std::vector<std::string> run_command(const ExperimentSpec& spec, const fs::path& out_dir) {
  if (spec.reps < 1) throw ArgumentError("reps must be at least 1");
  spec.sim.check();
  spec.learners.check();
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  const auto& c = spec.command;
  if (c == "simulate") files = write_simulate(spec, out_dir);
  else if (c == "fit") files = write_fit(spec, out_dir);
  else if (c == "compare-coefficients") files = write_coefficients(spec, out_dir);
  else if (c == "compare-paths") files = write_paths(spec, out_dir);
  else if (c == "curve") files = write_curves(spec, out_dir);
  else if (c == "auc") files = write_auc(spec, out_dir);
  else if (c == "verify-equivalence") files = write_equivalence(spec, out_dir);
  else throw ArgumentError("unknown command '" + c + "'");

  Json manifest{{"tool", "stacksurv"},
                {"version", kVersion},
                {"seed", spec.seed},
                {"spec", to_json(spec)},
                {"outputs", files}};
  write_atomic(out_dir / "manifest.json", summary_json(manifest));
  files.push_back("manifest.json");
  return files;
}

std::vector<std::string> run_manifest(const fs::path& manifest, const fs::path& out_dir) {
  std::ifstream in(manifest);
  if (!in) throw ArgumentError("cannot open manifest '" + manifest.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return run_command(experiment_spec_from_json(j.at("spec")), out_dir);
}

}  // namespace stacksurv
