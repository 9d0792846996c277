#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "stacksurv/learners.hpp"
#include "stacksurv/stacker.hpp"
#include "stacksurv/survdata.hpp"

namespace stacksurv {

struct GreenwoodBand {
  std::vector<double> std_errors;
  std::vector<double> lower;
  std::vector<double> upper;
  // True from the first period whose variance term is infinite (n_j == y_j).
  std::vector<bool> undefined;
};

/*!
 * Right-continuous step survival curve evaluated at training event times.
 *
 * Period q covers [times[q], times[q+1]); survival before times[0] is 1.
 * Times are strictly increasing; tied events share one period.
 */
struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> hazard_raw;
  std::vector<double> hazard;  // clamped to [0, 1]
  std::vector<double> std_errors;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> band_undefined;
  double level = 0.95;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  // Step value at t: the last period starting at or before t, or 1.
  double at(double t) const;
  std::size_t clamped_periods() const;
  double clamped_fraction() const;
};

struct HazardPrediction {
  std::vector<double> raw;
  std::vector<double> clamped;
};

// h_q = clamp(alpha_q + f(x_new - M_q), 0, 1) for every stratum in order.
HazardPrediction predict_conditional_hazards(const Model& model,
                                             const std::vector<Stratum>& strata,
                                             std::span<const double> x_new);

// Builds the curve from conditional hazards: S_q = prod_{j<=q} (1 - h_j),
// with a Greenwood band from the given risk-set sizes and death counts.
// Consecutive entries with equal times form a single period whose hazard
// and death count are the sums over the tied entries.
SurvivalCurve curve_from_hazards(std::vector<double> times, std::vector<double> raw_hazards,
                                 std::span<const double> at_risk,
                                 std::span<const double> deaths, double level = 0.95);

// Survival curve for x_new from a model trained on a centered stack.
SurvivalCurve predict_survival_curve(const Model& model, const StackedData& centered,
                                     std::span<const double> x_new, double level = 0.95);

// sd_q = S_q * sqrt(sum_{j<=q} y_j / (n_j (n_j - y_j))), band S_q -/+ z sd
// clamped to [0, 1], z the two-sided normal quantile for `level`.
GreenwoodBand greenwood_band(std::span<const double> survival, std::span<const double> at_risk,
                             std::span<const double> deaths, double level = 0.95);

// Two-sided standard normal critical value for a confidence level.
double normal_critical_value(double level);

// Product-limit estimate over distinct event times with its Greenwood band.
SurvivalCurve kaplan_meier(const SurvivalDataset& data, double level = 0.95);

// Risk-set sizes and death counts per stratum, as used for Greenwood bands.
void stratum_counts(const std::vector<Stratum>& strata, std::vector<double>& at_risk,
                    std::vector<double>& deaths);

// CSV: t,survival,sd,lower,upper,hazard_raw,hazard_clamped
void write_curve_csv(std::ostream& out, const SurvivalCurve& curve);

}  // namespace stacksurv
