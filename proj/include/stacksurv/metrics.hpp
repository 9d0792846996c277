#pragma once

#include <span>
#include <string>
#include <vector>

#include "stacksurv/curves.hpp"

namespace stacksurv {

// Where a risk score came from. Every provenance is oriented so that a
// higher score means an earlier expected event.
enum class RiskSource { kLinearPredictor, kOneMinusMidpointSurvival, kNegativeCurveArea };

std::string to_string(RiskSource source);

struct RiskScores {
  std::vector<double> values;
  RiskSource source = RiskSource::kLinearPredictor;
};

/*!
 * Harrell's concordance index
 *
 *   C = sum_{i,i'} I(y_i > y_i') I(eta_i' > eta_i) delta_i'
 *       / sum_{i,i'} I(y_i > y_i') delta_i'.
 *
 * Risk ties inside a comparable pair count as discordant (strict
 * inequality). Throws UndefinedMetric when no pair is comparable.
 */
double c_index(std::span<const double> times, std::span<const int> statuses,
               std::span<const double> risks);

// 1 - S(t_mid), t_mid the median of the curve's event times.
double risk_from_midpoint(const SurvivalCurve& curve);
double risk_from_midpoint(const SurvivalCurve& curve, double t_mid);

// Negated exact area under the step curve on [0, t_last].
double risk_from_area(const SurvivalCurve& curve);

// Median of the event times of a curve (mean of the middle two for even counts).
double median_time(const SurvivalCurve& curve);

}  // namespace stacksurv
