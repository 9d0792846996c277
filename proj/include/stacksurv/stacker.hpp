#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "stacksurv/survdata.hpp"

namespace stacksurv {

// Subjects still under observation at the event time of `anchor`, i.e.
// every i' with y_{i'} >= y_anchor. Members are in record order.
struct RiskSet {
  std::size_t anchor = 0;
  double time = 0.0;
  std::vector<std::size_t> members;

  std::size_t size() const { return members.size(); }
};

// Risk sets for every uncensored record, ordered by event time with ties
// broken by record index. Throws ArgumentError if nothing is uncensored.
std::vector<RiskSet> build_risk_sets(const SurvivalDataset& data);

enum class StackForm { kIndicator, kCentered };

// Per-stratum metadata: one stratum per risk set.
struct Stratum {
  double time = 0.0;
  std::size_t anchor = 0;          // subject index of the event
  std::size_t size = 0;            // rows in the stratum (n_q)
  std::size_t deaths = 0;          // rows with response 1
  double response_mean = 0.0;      // alpha_q
  Eigen::VectorXd covariate_mean;  // M_q
  std::size_t first_row = 0;       // rows are contiguous per stratum
};

/*!
 * Stacked classification problem.
 *
 * Indicator form: design = [indicator columns (one per stratum) | covariates],
 * binary response. Centered form: design holds only the covariates, each
 * column and the response centered within its stratum.
 */
struct StackedData {
  StackForm form = StackForm::kIndicator;
  std::size_t num_features = 0;
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  std::vector<std::size_t> stratum_of_row;
  std::vector<std::size_t> subject_of_row;
  std::vector<Stratum> strata;

  std::size_t rows() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t num_strata() const { return strata.size(); }
  std::size_t indicator_columns() const {
    return form == StackForm::kIndicator ? strata.size() : 0;
  }
  // The covariate block (uncentered for indicator form, centered otherwise).
  auto covariates() const {
    return design.rightCols(static_cast<Eigen::Index>(num_features));
  }
};

StackedData stack(const SurvivalDataset& data);
StackedData stack_centered(const SurvivalDataset& data);

// Converts an indicator-form stack to the centered form.
StackedData center(const StackedData& indicator_form);

/*!
 * Keeps every response-1 row and each response-0 row independently with
 * probability keep_fraction. Draws one uniform per response-0 row, in row
 * order, from RandomStream(seed); a row is kept when the draw is below
 * keep_fraction. Stratum metadata is recomputed on the retained rows.
 */
StackedData subsample_controls(const StackedData& stacked, double keep_fraction,
                               std::uint64_t seed);

// Time-varying stack: each risk-set member contributes its most recent
// measurement at or before the stratum's event time.
StackedData stack_time_varying(const LongitudinalDataset& data,
                               StackForm form = StackForm::kIndicator);

// CSV export: stratum,response,ind_1..ind_m,x_1..x_p (indicator form) or
// stratum,response,x_1..x_p (centered form). Strata are 1-based.
void write_stacked_csv(std::ostream& out, const StackedData& stacked);

}  // namespace stacksurv
