#include "stacksurv/survdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "csv_util.hpp"
#include "stacksurv/error.hpp"

namespace stacksurv {

namespace {

void check_status(int status, const std::string& where) {
  if (status != 0 && status != 1)
    throw ValidationError(where + ": status must be 0 or 1, got " +
                          std::to_string(status));
}

void check_time(double t, const std::string& where) {
  if (!std::isfinite(t) || t < 0.0)
    throw ValidationError(where + ": time must be finite and nonnegative");
}

std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < p; ++k) names.push_back("x" + std::to_string(k + 1));
  return names;
}

struct Header {
  std::vector<std::string> cells;

  std::size_t require(const std::string& name) const {
    auto it = std::find(cells.begin(), cells.end(), name);
    if (it == cells.end()) throw ParseError("header has no column '" + name + "'");
    return static_cast<std::size_t>(it - cells.begin());
  }
  std::ptrdiff_t find(const std::string& name) const {
    auto it = std::find(cells.begin(), cells.end(), name);
    return it == cells.end() ? -1 : it - cells.begin();
  }
};

std::vector<std::size_t> covariate_columns(const Header& header,
                                           const CsvSchema& schema,
                                           const std::vector<std::size_t>& reserved) {
  std::vector<std::size_t> cols;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) cols.push_back(header.require(name));
  } else {
    for (std::size_t c = 0; c < header.cells.size(); ++c)
      if (std::find(reserved.begin(), reserved.end(), c) == reserved.end())
        cols.push_back(c);
  }
  if (cols.empty()) throw ParseError("header names no covariate column");
  return cols;
}

double cell_number(const std::vector<std::string>& cells, std::size_t col,
                   const Header& header, std::size_t line_no) {
  double v = 0.0;
  if (col >= cells.size() || !detail::parse_number(cells[col], v))
    throw ParseError("row " + std::to_string(line_no) + ", column '" +
                     header.cells[col] + "': missing or non-numeric value");
  return v;
}

int cell_status(const std::vector<std::string>& cells, std::size_t col,
                const Header& header, std::size_t line_no) {
  const double v = cell_number(cells, col, header, line_no);
  if (v != 0.0 && v != 1.0)
    throw ValidationError("row " + std::to_string(line_no) + ", column '" +
                          header.cells[col] + "': status must be 0 or 1");
  return static_cast<int>(v);
}

Header read_header(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!detail::next_line(in, line, line_no)) throw ParseError("empty CSV input");
  Header h{detail::split_line(line)};
  return h;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records,
                                 std::vector<std::string> feature_names)
    : records_(std::move(records)), names_(std::move(feature_names)) {
  num_features_ = records_.empty() ? names_.size() : records_.front().covariates.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto where = "record " + std::to_string(i);
    if (records_[i].covariates.size() != num_features_)
      throw ValidationError(where + ": covariate length differs from dataset p");
    check_time(records_[i].time, where);
    check_status(records_[i].status, where);
  }
  if (names_.empty()) names_ = default_names(num_features_);
  if (names_.size() != num_features_)
    throw ValidationError("feature name count differs from covariate count");
}

std::size_t SurvivalDataset::num_events() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [](const auto& r) { return r.status == 1; }));
}

Eigen::MatrixXd SurvivalDataset::covariate_matrix() const {
  Eigen::MatrixXd x(size(), num_features_);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < num_features_; ++k) x(i, k) = records_[i].covariates[k];
  return x;
}

Eigen::VectorXd SurvivalDataset::times() const {
  Eigen::VectorXd t(size());
  for (std::size_t i = 0; i < size(); ++i) t(i) = records_[i].time;
  return t;
}

std::vector<int> SurvivalDataset::statuses() const {
  std::vector<int> s;
  s.reserve(size());
  for (const auto& r : records_) s.push_back(r.status);
  return s;
}

bool operator==(const SurvivalDataset& a, const SurvivalDataset& b) {
  if (a.names_ != b.names_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a.records_[i];
    const auto& rb = b.records_[i];
    if (ra.time != rb.time || ra.status != rb.status || ra.covariates != rb.covariates)
      return false;
  }
  return true;
}

const std::vector<double>& LongitudinalSubject::covariates_at(double t) const {
  auto it = std::upper_bound(measurements.begin(), measurements.end(), t,
                             [](double v, const Measurement& m) { return v < m.time; });
  if (it == measurements.begin())
    throw std::logic_error("no measurement at or before the requested time");
  return std::prev(it)->covariates;
}

LongitudinalDataset::LongitudinalDataset(std::vector<LongitudinalSubject> subjects,
                                         std::vector<std::string> feature_names)
    : subjects_(std::move(subjects)), names_(std::move(feature_names)) {
  num_features_ = names_.size();
  if (!subjects_.empty() && !subjects_.front().measurements.empty())
    num_features_ = subjects_.front().measurements.front().covariates.size();
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const auto& s = subjects_[i];
    const auto where = "subject " + std::to_string(i);
    check_time(s.time, where);
    check_status(s.status, where);
    if (s.measurements.empty() || s.measurements.front().time != 0.0)
      throw ValidationError(where + ": first measurement must be at time 0");
    for (std::size_t k = 0; k < s.measurements.size(); ++k) {
      const auto& m = s.measurements[k];
      if (m.covariates.size() != num_features_)
        throw ValidationError(where + ": covariate length differs from dataset p");
      if (k > 0 && !(m.time > s.measurements[k - 1].time))
        throw ValidationError(where + ": measurement times must strictly increase");
    }
    if (s.measurements.back().time > s.time)
      throw ValidationError(where + ": measurement after the terminal time");
  }
  if (names_.empty()) names_ = default_names(num_features_);
  if (names_.size() != num_features_)
    throw ValidationError("feature name count differs from covariate count");
}

SurvivalDataset LongitudinalDataset::baseline() const {
  std::vector<SurvivalRecord> records;
  records.reserve(size());
  for (const auto& s : subjects_)
    records.push_back({s.measurements.front().covariates, s.time, s.status});
  return SurvivalDataset(std::move(records), names_);
}

bool operator==(const LongitudinalDataset& a, const LongitudinalDataset& b) {
  if (a.names_ != b.names_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& sa = a.subjects_[i];
    const auto& sb = b.subjects_[i];
    if (sa.time != sb.time || sa.status != sb.status ||
        sa.measurements.size() != sb.measurements.size())
      return false;
    for (std::size_t k = 0; k < sa.measurements.size(); ++k)
      if (sa.measurements[k].time != sb.measurements[k].time ||
          sa.measurements[k].covariates != sb.measurements[k].covariates)
        return false;
  }
  return true;
}

SurvivalDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::size_t line_no = 0;
  const Header header = read_header(in, line_no);
  const auto time_col = header.require(schema.time_column);
  const auto status_col = header.require(schema.status_column);
  const auto cols = covariate_columns(header, schema, {time_col, status_col});

  std::vector<std::string> names;
  for (auto c : cols) names.push_back(header.cells[c]);

  std::vector<SurvivalRecord> records;
  std::string line;
  while (detail::next_line(in, line, line_no)) {
    const auto cells = detail::split_line(line);
    SurvivalRecord r;
    r.time = cell_number(cells, time_col, header, line_no);
    r.status = cell_status(cells, status_col, header, line_no);
    for (auto c : cols) r.covariates.push_back(cell_number(cells, c, header, line_no));
    records.push_back(std::move(r));
  }
  return SurvivalDataset(std::move(records), std::move(names));
}

SurvivalDataset load_csv(const std::string& path, const CsvSchema& schema) {
  auto in = open_in(path);
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const SurvivalDataset& data) {
  out << "time,status";
  for (const auto& name : data.feature_names()) out << ',' << name;
  out << '\n';
  for (const auto& r : data.records()) {
    out << format_double(r.time) << ',' << r.status;
    for (double v : r.covariates) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_csv(const std::string& path, const SurvivalDataset& data) {
  auto out = open_out(path);
  write_csv(out, data);
}

LongitudinalDataset read_longitudinal_csv(std::istream& in, const CsvSchema& schema) {
  std::size_t line_no = 0;
  const Header header = read_header(in, line_no);
  const auto id_col = header.require(schema.id_column);
  const auto obs_col = header.require(schema.obs_time_column);
  const auto time_col = header.require(schema.time_column);
  const auto status_col = header.require(schema.status_column);
  const auto cols =
      covariate_columns(header, schema, {id_col, obs_col, time_col, status_col});

  std::vector<std::string> names;
  for (auto c : cols) names.push_back(header.cells[c]);

  std::vector<LongitudinalSubject> subjects;
  std::vector<std::string> seen_ids;
  std::string line;
  std::string current_id;
  while (detail::next_line(in, line, line_no)) {
    const auto cells = detail::split_line(line);
    if (id_col >= cells.size() || cells[id_col].empty())
      throw ParseError("row " + std::to_string(line_no) + ", column '" +
                       header.cells[id_col] + "': missing value");
    const auto& id = cells[id_col];
    const double time = cell_number(cells, time_col, header, line_no);
    const int status = cell_status(cells, status_col, header, line_no);
    if (subjects.empty() || id != current_id) {
      if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end())
        throw ParseError("row " + std::to_string(line_no) + ": rows of subject '" +
                         id + "' are not contiguous");
      seen_ids.push_back(id);
      current_id = id;
      subjects.push_back({{}, time, status});
    } else if (subjects.back().time != time || subjects.back().status != status) {
      throw ValidationError("row " + std::to_string(line_no) + ": subject '" + id +
                            "' has inconsistent time/status");
    }
    Measurement m;
    m.time = cell_number(cells, obs_col, header, line_no);
    for (auto c : cols) m.covariates.push_back(cell_number(cells, c, header, line_no));
    subjects.back().measurements.push_back(std::move(m));
  }
  return LongitudinalDataset(std::move(subjects), std::move(names));
}

LongitudinalDataset load_longitudinal_csv(const std::string& path,
                                          const CsvSchema& schema) {
  auto in = open_in(path);
  return read_longitudinal_csv(in, schema);
}

void write_longitudinal_csv(std::ostream& out, const LongitudinalDataset& data) {
  out << "id,obs_time,time,status";
  for (const auto& name : data.feature_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (const auto& m : s.measurements) {
      out << i + 1 << ',' << format_double(m.time) << ',' << format_double(s.time)
          << ',' << s.status;
      for (double v : m.covariates) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void save_longitudinal_csv(const std::string& path, const LongitudinalDataset& data) {
  auto out = open_out(path);
  write_longitudinal_csv(out, data);
}

std::vector<std::string> validate(const SurvivalDataset& data) {
  std::vector<std::string> warnings;
  if (data.size() > 0 && !data.has_event()) warnings.push_back("all records censored");

  std::map<double, std::size_t> death_counts;
  for (const auto& r : data.records())
    if (r.status == 1) ++death_counts[r.time];
  std::map<std::size_t, std::size_t> groups_by_size;
  for (const auto& [t, c] : death_counts)
    if (c > 1) ++groups_by_size[c];
  for (const auto& [sz, groups] : groups_by_size) {
    std::ostringstream msg;
    msg << "tied death times: " << groups << (groups == 1 ? " group" : " groups")
        << " of size " << sz;
    warnings.push_back(msg.str());
  }

  for (std::size_t k = 0; k < data.num_features(); ++k) {
    bool constant = true;
    for (const auto& r : data.records())
      if (r.covariates[k] != data[0].covariates[k]) {
        constant = false;
        break;
      }
    if (constant && data.size() > 0)
      warnings.push_back("zero-variance covariate: " + data.feature_names()[k]);
  }
  return warnings;
}

}  // namespace stacksurv
