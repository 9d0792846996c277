#include "stacksurv/stacker.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "stacksurv/error.hpp"
#include "stacksurv/rng.hpp"

namespace stacksurv {

namespace {

struct EventOrder {
  std::size_t index;
  double time;
};

// Uncensored records in event-time order, ties by record index.
std::vector<EventOrder> ordered_events(const std::vector<double>& times,
                                       const std::vector<int>& status) {
  std::vector<EventOrder> events;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (status[i] == 1) events.push_back({i, times[i]});
  if (events.empty()) throw ArgumentError("no uncensored records: risk sets are empty");
  std::stable_sort(events.begin(), events.end(),
                   [](const EventOrder& a, const EventOrder& b) { return a.time < b.time; });
  return events;
}

std::vector<RiskSet> risk_sets_from(const std::vector<double>& times,
                                    const std::vector<int>& status) {
  std::vector<RiskSet> sets;
  for (const auto& ev : ordered_events(times, status)) {
    RiskSet rs{ev.index, ev.time, {}};
    for (std::size_t j = 0; j < times.size(); ++j)
      if (times[j] >= ev.time) rs.members.push_back(j);
    sets.push_back(std::move(rs));
  }
  return sets;
}

// Lays out strata given a covariate lookup (subject, event time) -> row.
template <class CovariatesAt>
StackedData build_indicator(const std::vector<RiskSet>& sets, std::size_t p,
                            CovariatesAt&& covariates_at) {
  const std::size_t m = sets.size();
  std::size_t rows = 0;
  for (const auto& rs : sets) rows += rs.size();

  StackedData out;
  out.form = StackForm::kIndicator;
  out.num_features = p;
  out.design = Eigen::MatrixXd::Zero(rows, m + p);
  out.response = Eigen::VectorXd::Zero(rows);
  out.stratum_of_row.reserve(rows);
  out.subject_of_row.reserve(rows);

  std::size_t row = 0;
  for (std::size_t q = 0; q < m; ++q) {
    const auto& rs = sets[q];
    Stratum s;
    s.time = rs.time;
    s.anchor = rs.anchor;
    s.first_row = row;
    s.size = rs.size();
    s.deaths = 1;
    s.covariate_mean = Eigen::VectorXd::Zero(p);
    for (std::size_t member : rs.members) {
      const auto& x = covariates_at(member, rs.time);
      out.design(row, q) = 1.0;
      for (std::size_t k = 0; k < p; ++k) {
        out.design(row, m + k) = x[k];
        s.covariate_mean(k) += x[k];
      }
      out.response(row) = member == rs.anchor ? 1.0 : 0.0;
      out.stratum_of_row.push_back(q);
      out.subject_of_row.push_back(member);
      ++row;
    }
    s.covariate_mean /= static_cast<double>(s.size);
    s.response_mean = 1.0 / static_cast<double>(s.size);
    out.strata.push_back(std::move(s));
  }
  return out;
}

void recompute_metadata(StackedData& sd) {
  const auto p = static_cast<Eigen::Index>(sd.num_features);
  const auto x = sd.covariates();
  for (auto& s : sd.strata) {
    s.size = 0;
    s.deaths = 0;
    s.covariate_mean = Eigen::VectorXd::Zero(p);
    s.response_mean = 0.0;
  }
  std::size_t prev = static_cast<std::size_t>(-1);
  for (std::size_t r = 0; r < sd.rows(); ++r) {
    auto& s = sd.strata[sd.stratum_of_row[r]];
    if (sd.stratum_of_row[r] != prev) s.first_row = r;
    prev = sd.stratum_of_row[r];
    ++s.size;
    if (sd.response(r) == 1.0) ++s.deaths;
    s.response_mean += sd.response(r);
    s.covariate_mean += x.row(static_cast<Eigen::Index>(r)).transpose();
  }
  for (auto& s : sd.strata) {
    s.covariate_mean /= static_cast<double>(s.size);
    s.response_mean /= static_cast<double>(s.size);
  }
}

}  // namespace

std::vector<RiskSet> build_risk_sets(const SurvivalDataset& data) {
  std::vector<double> times;
  for (const auto& r : data.records()) times.push_back(r.time);
  return risk_sets_from(times, data.statuses());
}

StackedData stack(const SurvivalDataset& data) {
  const auto sets = build_risk_sets(data);
  return build_indicator(sets, data.num_features(),
                         [&](std::size_t i, double) -> const std::vector<double>& {
                           return data[i].covariates;
                         });
}

StackedData center(const StackedData& in) {
  if (in.form != StackForm::kIndicator)
    throw ArgumentError("center expects an indicator-form stack");
  StackedData out;
  out.form = StackForm::kCentered;
  out.num_features = in.num_features;
  out.design = in.covariates();
  out.response = in.response;
  out.stratum_of_row = in.stratum_of_row;
  out.subject_of_row = in.subject_of_row;
  out.strata = in.strata;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto& s = out.strata[out.stratum_of_row[r]];
    const auto row = static_cast<Eigen::Index>(r);
    out.design.row(row) -= s.covariate_mean.transpose();
    out.response(row) -= s.response_mean;
  }
  return out;
}

StackedData stack_centered(const SurvivalDataset& data) { return center(stack(data)); }

StackedData subsample_controls(const StackedData& in, double keep_fraction,
                               std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ArgumentError("keep_fraction must lie in (0, 1]");
  if (in.form != StackForm::kIndicator)
    throw ArgumentError("subsample_controls expects an indicator-form stack");

  RandomStream rng(seed);
  std::vector<Eigen::Index> kept;
  kept.reserve(in.rows());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    if (in.response(row) == 1.0 || rng.uniform() < keep_fraction) kept.push_back(row);
  }

  StackedData out;
  out.form = in.form;
  out.num_features = in.num_features;
  out.strata = in.strata;
  out.design = in.design(kept, Eigen::all);
  out.response = in.response(kept);
  for (auto row : kept) {
    out.stratum_of_row.push_back(in.stratum_of_row[static_cast<std::size_t>(row)]);
    out.subject_of_row.push_back(in.subject_of_row[static_cast<std::size_t>(row)]);
  }
  recompute_metadata(out);
  return out;
}

StackedData stack_time_varying(const LongitudinalDataset& data, StackForm form) {
  std::vector<double> times;
  std::vector<int> status;
  for (const auto& s : data.subjects()) {
    times.push_back(s.time);
    status.push_back(s.status);
  }
  const auto sets = risk_sets_from(times, status);
  auto indicator = build_indicator(sets, data.num_features(),
                                   [&](std::size_t i, double t) -> const std::vector<double>& {
                                     return data[i].covariates_at(t);
                                   });
  return form == StackForm::kIndicator ? indicator : center(indicator);
}

void write_stacked_csv(std::ostream& out, const StackedData& sd) {
  const std::size_t m = sd.indicator_columns();
  out << "stratum,response";
  for (std::size_t q = 0; q < m; ++q) out << ",ind_" << q + 1;
  for (std::size_t k = 0; k < sd.num_features; ++k) out << ",x_" << k + 1;
  out << '\n';
  for (std::size_t r = 0; r < sd.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    out << sd.stratum_of_row[r] + 1 << ',' << format_double(sd.response(row));
    for (Eigen::Index c = 0; c < sd.design.cols(); ++c)
      out << ',' << format_double(sd.design(row, c));
    out << '\n';
  }
}

}  // namespace stacksurv
