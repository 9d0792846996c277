#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stacksurv/curves.hpp"
#include "stacksurv/learners.hpp"
#include "stacksurv/report.hpp"
#include "stacksurv/simgen.hpp"
#include "stacksurv/stacklogit.hpp"

namespace stacksurv {

inline constexpr const char* kVersion = "0.1.0";

/*!
 * Everything needed to reproduce one batch experiment. Replicate r of an
 * experiment simulates with seed replicate_seed(seed, r); held-out test
 * subjects for the AUC experiment use test_seed(seed, r).
 */
struct ExperimentSpec {
  std::string command;  // simulate | fit | compare-coefficients | compare-paths |
                        // curve | auc | verify-equivalence
  SimConfig sim = SimConfig::model1();
  LearnerConfig learners;
  std::vector<std::string> methods;
  std::uint64_t seed = 1;
  int reps = 10;
  std::size_t n_test = 20;
  std::vector<double> x_new;  // empty: 0.5 in every coordinate
  int lambda_count = 50;
  double lambda_ratio = 0.01;
  double level = 0.95;
  std::string input;          // CSV for fit / verify-equivalence; empty means simulate
  bool longitudinal_input = false;
};

Json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const Json& j);

std::uint64_t replicate_seed(std::uint64_t seed, int replicate);
std::uint64_t test_seed(std::uint64_t seed, int replicate);
std::vector<double> resolve_x_new(const ExperimentSpec& spec);

struct ReplicateStatus {
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
};

// Paired Cox / stacked-logistic estimates over seeded replicates.
struct CoefficientReport {
  struct Row {
    int replicate = 0;
    std::size_t coefficient = 0;
    double cox = 0, logistic = 0, cox_se = 0, logistic_se = 0, cox_p = 0, logistic_p = 0;
  };
  struct Summary {
    std::size_t replicates_ok = 0;
    bool valid = false;  // false when no replicate succeeded
    double coefficient_correlation = 0;
    double max_abs_difference = 0;
    double p_value_rank_correlation = 0;
  };
  std::vector<Row> rows;
  std::vector<ReplicateStatus> replicates;
  Summary summary;
};

CoefficientReport::Summary summarize_coefficients(const std::vector<CoefficientReport::Row>& rows,
                                                  std::size_t replicates_ok);
CoefficientReport run_compare_coefficients(const ExperimentSpec& spec);

// Lasso paths of both fitters on the Cox lambda grid.
struct PathReport {
  struct Row {
    int replicate = 0;
    std::size_t lambda_index = 0;
    double lambda = 0;
    std::size_t coefficient = 0;
    double cox = 0, logistic = 0;
  };
  std::vector<Row> rows;
  std::vector<ReplicateStatus> replicates;
  std::size_t points = 0;
  std::size_t sign_agreements = 0;
  double agreement() const { return points ? static_cast<double>(sign_agreements) / points : 0.0; }
};

PathReport run_compare_paths(const ExperimentSpec& spec);

struct CurveReport {
  struct Entry {
    int replicate = 0;
    std::string method;
    SurvivalCurve curve;
  };
  struct Score {
    int replicate = 0;
    std::string method;
    double ise = 0;
    double mean_abs_gap_vs_cox = 0;  // NaN when cox was not run
    double clamped_fraction = 0;
  };
  std::vector<Entry> curves;  // includes method "truth"
  std::vector<Score> scores;
  std::vector<ReplicateStatus> replicates;
  std::vector<double> x_new;
  double km_max_abs_difference = 0;  // null learner vs Kaplan-Meier, NaN if not run

  std::map<std::string, double> mean_ise() const;
  std::map<std::string, double> mean_gap_vs_cox() const;
};

CurveReport run_curve_experiment(const ExperimentSpec& spec);

// ISE of a curve against a reference on the grid: sum_q (S(t_q) - R(t_q))^2 (t_q - t_{q-1}).
double integrated_squared_error(const SurvivalCurve& curve, const std::vector<double>& grid,
                                const std::vector<double>& reference);

struct AucReport {
  struct Row {
    int replicate = 0;
    std::string method;
    std::string source;
    double c_index = 0;  // NaN when undefined
  };
  struct Agreement {
    int replicate = 0;
    bool orders_agree = false;
    double cox = 0, logistic = 0;  // midpoint-substitute c-index
  };
  std::vector<Row> rows;
  std::vector<Agreement> agreement;
  std::vector<ReplicateStatus> replicates;

  // Mean over replicates with a defined value, keyed by "method/source".
  std::map<std::string, double> means() const;
};

AucReport run_auc_experiment(const ExperimentSpec& spec);

struct EquivalenceReport {
  FitResult fit;
  std::vector<EquivalenceRow> rows;
};

EquivalenceReport run_verify_equivalence(const ExperimentSpec& spec);

/*!
 * Runs spec.command and writes its outputs plus manifest.json into
 * out_dir. The manifest holds the full spec, so run_manifest on it
 * reproduces every output byte for byte. Returns the written file names.
 */
std::vector<std::string> run_command(const ExperimentSpec& spec, const std::filesystem::path& out_dir);
std::vector<std::string> run_manifest(const std::filesystem::path& manifest,
                                      const std::filesystem::path& out_dir);

// Pearson correlation and Spearman rank correlation (average ranks for ties).
double pearson(const std::vector<double>& a, const std::vector<double>& b);
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace stacksurv
