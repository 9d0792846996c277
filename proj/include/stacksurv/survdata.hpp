#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stacksurv {

// One subject of a right-censored sample: covariates x_i, observed time y_i
// and status delta_i (1 = event observed, 0 = censored).
struct SurvivalRecord {
  std::vector<double> covariates;
  double time = 0.0;
  int status = 0;
};

// Immutable collection of records sharing the same covariate dimension.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  // Throws ValidationError if records disagree on p, a time is negative or
  // non-finite, or a status is outside {0, 1}.
  explicit SurvivalDataset(std::vector<SurvivalRecord> records,
                           std::vector<std::string> feature_names = {});

  std::size_t size() const { return records_.size(); }
  std::size_t num_features() const { return num_features_; }
  const std::vector<SurvivalRecord>& records() const { return records_; }
  const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<std::string>& feature_names() const { return names_; }

  std::size_t num_events() const;
  bool has_event() const { return num_events() > 0; }

  Eigen::MatrixXd covariate_matrix() const;
  Eigen::VectorXd times() const;
  std::vector<int> statuses() const;

  friend bool operator==(const SurvivalDataset&, const SurvivalDataset&);

 private:
  std::vector<SurvivalRecord> records_;
  std::vector<std::string> names_;
  std::size_t num_features_ = 0;
};

// A covariate vector observed from `time` onward.
struct Measurement {
  double time = 0.0;
  std::vector<double> covariates;
};

struct LongitudinalSubject {
  std::vector<Measurement> measurements;
  double time = 0.0;
  int status = 0;

  // Most recent measurement taken at or before t.
  const std::vector<double>& covariates_at(double t) const;
};

class LongitudinalDataset {
 public:
  LongitudinalDataset() = default;
  // Enforces: first measurement at 0, strictly increasing measurement times,
  // last measurement <= terminal time, consistent p, status in {0, 1}.
  explicit LongitudinalDataset(std::vector<LongitudinalSubject> subjects,
                               std::vector<std::string> feature_names = {});

  std::size_t size() const { return subjects_.size(); }
  std::size_t num_features() const { return num_features_; }
  const std::vector<LongitudinalSubject>& subjects() const { return subjects_; }
  const LongitudinalSubject& operator[](std::size_t i) const {
    return subjects_[i];
  }
  const std::vector<std::string>& feature_names() const { return names_; }

  // Static dataset built from the time-0 measurements.
  SurvivalDataset baseline() const;

  friend bool operator==(const LongitudinalDataset&,
                         const LongitudinalDataset&);

 private:
  std::vector<LongitudinalSubject> subjects_;
  std::vector<std::string> names_;
  std::size_t num_features_ = 0;
};

// Column mapping for CSV ingestion. Empty `covariates` means every column
// other than the time/status (and id/obs_time) columns, in header order.
struct CsvSchema {
  std::string time_column = "time";
  std::string status_column = "status";
  std::string id_column = "id";
  std::string obs_time_column = "obs_time";
  std::vector<std::string> covariates;
};

SurvivalDataset read_csv(std::istream& in, const CsvSchema& schema = {});
SurvivalDataset load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(std::ostream& out, const SurvivalDataset& data);
void save_csv(const std::string& path, const SurvivalDataset& data);

// Longitudinal schema: id,obs_time,time,status,x1..xp, one row per
// (subject, measurement). Rows of a subject must be contiguous.
LongitudinalDataset read_longitudinal_csv(std::istream& in,
                                          const CsvSchema& schema = {});
LongitudinalDataset load_longitudinal_csv(const std::string& path,
                                          const CsvSchema& schema = {});
void write_longitudinal_csv(std::ostream& out, const LongitudinalDataset& data);
void save_longitudinal_csv(const std::string& path,
                           const LongitudinalDataset& data);

// Non-fatal data-quality findings: tied event times, zero-variance columns,
// all-censored samples.
std::vector<std::string> validate(const SurvivalDataset& data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace stacksurv
