#include "stacksurv/metrics.hpp"

#include <algorithm>

#include "stacksurv/error.hpp"

namespace stacksurv {

std::string to_string(RiskSource source) {
  switch (source) {
    case RiskSource::kLinearPredictor:
      return "linear_predictor";
    case RiskSource::kOneMinusMidpointSurvival:
      return "one_minus_midpoint_survival";
    case RiskSource::kNegativeCurveArea:
      return "negative_curve_area";
  }
  return "unknown";
}

double c_index(std::span<const double> times, std::span<const int> statuses,
               std::span<const double> risks) {
  const std::size_t n = times.size();
  if (statuses.size() != n || risks.size() != n)
    throw ArgumentError("c_index: times, statuses and risks differ in length");
  double concordant = 0.0, comparable = 0.0;
  for (std::size_t j = 0; j < n; ++j) {  // j plays i' (the earlier event)
    if (statuses[j] != 1) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(times[i] > times[j])) continue;
      comparable += 1.0;
      if (risks[j] > risks[i]) concordant += 1.0;
    }
  }
  if (comparable == 0.0) throw UndefinedMetric("c_index: no comparable pairs");
  return concordant / comparable;
}

double median_time(const SurvivalCurve& curve) {
  if (curve.empty()) throw ArgumentError("median_time: empty curve");
  std::vector<double> t = curve.times;
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 == 1 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

double risk_from_midpoint(const SurvivalCurve& curve, double t_mid) {
  if (curve.empty()) throw ArgumentError("risk_from_midpoint: empty curve");
  return 1.0 - curve.at(t_mid);
}

double risk_from_midpoint(const SurvivalCurve& curve) {
  return risk_from_midpoint(curve, median_time(curve));
}

double risk_from_area(const SurvivalCurve& curve) {
  if (curve.empty()) throw ArgumentError("risk_from_area: empty curve");
  double area = 0.0, prev_t = 0.0, prev_s = 1.0;
  for (std::size_t q = 0; q < curve.size(); ++q) {
    area += prev_s * (curve.times[q] - prev_t);
    prev_t = curve.times[q];
    prev_s = curve.survival[q];
  }
  return -area;
}

}  // namespace stacksurv
