#include "stacksurv/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "stacksurv/error.hpp"

namespace stacksurv {

double SurvivalCurve::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

std::size_t SurvivalCurve::clamped_periods() const {
  std::size_t n = 0;
  for (std::size_t q = 0; q < hazard.size(); ++q)
    if (hazard[q] != hazard_raw[q]) ++n;
  return n;
}

double SurvivalCurve::clamped_fraction() const {
  return empty() ? 0.0 : static_cast<double>(clamped_periods()) / static_cast<double>(size());
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

HazardPrediction predict_conditional_hazards(const Model& model,
                                             const std::vector<Stratum>& strata,
                                             std::span<const double> x_new) {
  HazardPrediction out;
  out.raw.reserve(strata.size());
  out.clamped.reserve(strata.size());
  Eigen::VectorXd shifted;
  for (const auto& s : strata) {
    if (static_cast<std::size_t>(s.covariate_mean.size()) != x_new.size())
      throw ArgumentError("x_new has " + std::to_string(x_new.size()) +
                          " covariates but the stack has " +
                          std::to_string(s.covariate_mean.size()));
    shifted = Eigen::Map<const Eigen::VectorXd>(x_new.data(), s.covariate_mean.size()) -
              s.covariate_mean;
    const double raw = s.response_mean + model.predict(shifted);
    out.raw.push_back(raw);
    out.clamped.push_back(std::clamp(raw, 0.0, 1.0));
  }
  return out;
}

GreenwoodBand greenwood_band(std::span<const double> survival, std::span<const double> at_risk,
                             std::span<const double> deaths, double level) {
  if (survival.size() != at_risk.size() || survival.size() != deaths.size())
    throw ArgumentError("greenwood_band: input lengths differ");
  const double z = normal_critical_value(level);
  GreenwoodBand band;
  double sum = 0.0;
  bool undefined = false;
  for (std::size_t q = 0; q < survival.size(); ++q) {
    if (deaths[q] < 0.0 || deaths[q] > at_risk[q])
      throw ArgumentError("greenwood_band: need n_j >= y_j >= 0");
    if (deaths[q] > 0.0) {
      if (deaths[q] == at_risk[q])
        undefined = true;
      else
        sum += deaths[q] / (at_risk[q] * (at_risk[q] - deaths[q]));
    }
    const double s = survival[q];
    if (undefined) {
      band.std_errors.push_back(std::numeric_limits<double>::infinity());
      band.lower.push_back(0.0);
      band.upper.push_back(1.0);
    } else {
      const double sd = s * std::sqrt(sum);
      band.std_errors.push_back(sd);
      band.lower.push_back(std::clamp(s - z * sd, 0.0, 1.0));
      band.upper.push_back(std::clamp(s + z * sd, 0.0, 1.0));
    }
    band.undefined.push_back(undefined);
  }
  return band;
}

SurvivalCurve curve_from_hazards(std::vector<double> times, std::vector<double> raw_hazards,
                                 std::span<const double> at_risk,
                                 std::span<const double> deaths, double level) {
  if (times.size() != raw_hazards.size() || times.size() != at_risk.size() ||
      times.size() != deaths.size())
    throw ArgumentError("curve_from_hazards: input lengths differ");
  SurvivalCurve c;
  c.level = level;
  std::vector<double> n, y;
  // Tied strata share one period: hazards and deaths add up.
  for (std::size_t q = 0; q < times.size(); ++q) {
    if (!c.times.empty() && times[q] == c.times.back()) {
      c.hazard_raw.back() += raw_hazards[q];
      y.back() += deaths[q];
      continue;
    }
    c.times.push_back(times[q]);
    c.hazard_raw.push_back(raw_hazards[q]);
    n.push_back(at_risk[q]);
    y.push_back(deaths[q]);
  }
  double s = 1.0;
  for (double h : c.hazard_raw) {
    const double clamped = std::clamp(h, 0.0, 1.0);
    c.hazard.push_back(clamped);
    s *= 1.0 - clamped;
    c.survival.push_back(s);
  }
  auto band = greenwood_band(c.survival, n, y, level);
  c.std_errors = std::move(band.std_errors);
  c.lower = std::move(band.lower);
  c.upper = std::move(band.upper);
  c.band_undefined = std::move(band.undefined);
  return c;
}

void stratum_counts(const std::vector<Stratum>& strata, std::vector<double>& at_risk,
                    std::vector<double>& deaths) {
  at_risk.clear();
  deaths.clear();
  for (const auto& s : strata) {
    at_risk.push_back(static_cast<double>(s.size));
    deaths.push_back(static_cast<double>(s.deaths));
  }
}

SurvivalCurve predict_survival_curve(const Model& model, const StackedData& centered,
                                     std::span<const double> x_new, double level) {
  if (centered.form != StackForm::kCentered)
    throw ArgumentError("predict_survival_curve expects a centered stack");
  auto hazards = predict_conditional_hazards(model, centered.strata, x_new);
  std::vector<double> times, at_risk, deaths;
  for (const auto& s : centered.strata) times.push_back(s.time);
  stratum_counts(centered.strata, at_risk, deaths);
  return curve_from_hazards(std::move(times), std::move(hazards.raw), at_risk, deaths, level);
}

SurvivalCurve kaplan_meier(const SurvivalDataset& data, double level) {
  std::map<double, double> deaths_at;
  for (const auto& r : data.records())
    if (r.status == 1) deaths_at[r.time] += 1.0;
  if (deaths_at.empty()) throw ArgumentError("kaplan_meier: no uncensored records");
  std::vector<double> times, hazards, at_risk, deaths;
  for (const auto& [t, d] : deaths_at) {
    double n = 0.0;
    for (const auto& r : data.records())
      if (r.time >= t) n += 1.0;
    times.push_back(t);
    hazards.push_back(d / n);
    at_risk.push_back(n);
    deaths.push_back(d);
  }
  return curve_from_hazards(std::move(times), std::move(hazards), at_risk, deaths, level);
}

void write_curve_csv(std::ostream& out, const SurvivalCurve& c) {
  out << "t,survival,sd,lower,upper,hazard_raw,hazard_clamped\n";
  for (std::size_t q = 0; q < c.size(); ++q)
    out << format_double(c.times[q]) << ',' << format_double(c.survival[q]) << ','
        << format_double(c.std_errors[q]) << ',' << format_double(c.lower[q]) << ','
        << format_double(c.upper[q]) << ',' << format_double(c.hazard_raw[q]) << ','
        << format_double(c.hazard[q]) << '\n';
}

}  // namespace stacksurv
