#include "stacksurv/simgen.hpp"

#include <cmath>

#include "stacksurv/error.hpp"

namespace stacksurv {

std::string to_string(SimModel model) {
  switch (model) {
    case SimModel::kModel1:
      return "model1";
    case SimModel::kModel2:
      return "model2";
    case SimModel::kTimeVarying:
      return "time_varying";
  }
  return "unknown";
}

SimModel parse_sim_model(const std::string& name) {
  if (name == "model1") return SimModel::kModel1;
  if (name == "model2") return SimModel::kModel2;
  if (name == "time_varying" || name == "time-varying") return SimModel::kTimeVarying;
  throw ArgumentError("unknown simulation model '" + name + "'");
}

SimConfig SimConfig::model1() {
  SimConfig c;
  c.beta = {-0.35, -0.2, 0.0, -0.4, 0.0, 0.0};
  return c;
}

SimConfig SimConfig::model2() {
  SimConfig c;
  c.model = SimModel::kModel2;
  c.beta = {-0.35, 0.2, 0.45, 0.6, 0.8, 0.01};
  c.t_max = 2.0;
  return c;
}

SimConfig SimConfig::time_varying() {
  SimConfig c = model1();
  c.model = SimModel::kTimeVarying;
  c.t_max = 3.0;
  return c;
}

void SimConfig::check() const {
  if (n < 2) throw ArgumentError("simulation needs n >= 2");
  if (p < 1) throw ArgumentError("simulation needs p >= 1");
  if (!(rho_base >= 0.0 && rho_base < 1.0)) throw ArgumentError("rho_base must lie in [0, 1)");
  if (!(t_max > 0.0)) throw ArgumentError("t_max must be positive");
  if (!(step_sd >= 0.0)) throw ArgumentError("step_sd must be nonnegative");
  if (model == SimModel::kModel2) {
    if (p != 6 || beta.size() != 6) throw ArgumentError("model2 needs p = 6 and 6 coefficients");
  } else if (beta.size() != p) {
    throw ArgumentError("beta length must equal p");
  }
}

Eigen::MatrixXd gen_correlated_normals(std::size_t n, std::size_t p, double rho_base,
                                       RandomStream& rng) {
  if (!(rho_base >= 0.0 && rho_base < 1.0)) throw ArgumentError("rho_base must lie in [0, 1)");
  const auto P = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd sigma(P, P);
  for (Eigen::Index j = 0; j < P; ++j)
    for (Eigen::Index k = 0; k < P; ++k)
      sigma(j, k) = std::pow(rho_base, static_cast<double>(std::abs(j - k)));
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), P);
  Eigen::VectorXd z(P);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index k = 0; k < P; ++k) z(k) = rng.normal();
    out.row(i) = (lower * z).transpose();
  }
  return out;
}

double true_rate(const SimConfig& c, std::span<const double> x) {
  if (x.size() != c.p || c.beta.size() != c.p) throw ArgumentError("true_rate: dimension mismatch");
  const auto& b = c.beta;
  double eta = 0.0;
  if (c.model == SimModel::kModel2) {
    eta = b[0] * x[4] * x[5] + b[1] * x[0] * x[1] + b[2] * x[2] * x[2] + b[3] * x[3] +
          b[4] * x[4] + b[5] * x[5];
  } else {
    for (std::size_t k = 0; k < c.p; ++k) eta += b[k] * x[k];
  }
  return std::exp(eta);
}

double true_survival(const SimConfig& config, std::span<const double> x, double t) {
  return std::exp(-t * true_rate(config, x));
}

namespace {

SurvivalDataset gen_static(const SimConfig& config, RandomStream& rng) {
  config.check();
  RandomStream cov_stream = rng.split(kCovariateStream);
  RandomStream event_stream = rng.split(kEventStream);
  const Eigen::MatrixXd x = gen_correlated_normals(config.n, config.p, config.rho_base, cov_stream);
  std::vector<SurvivalRecord> records;
  records.reserve(config.n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    SurvivalRecord r;
    for (Eigen::Index k = 0; k < x.cols(); ++k) r.covariates.push_back(x(i, k));
    const double t = event_stream.exponential() / true_rate(config, r.covariates);
    if (t > config.t_max) {
      r.time = config.t_max;
      r.status = 0;
    } else {
      r.time = t;
      r.status = 1;
    }
    records.push_back(std::move(r));
  }
  return SurvivalDataset(std::move(records));
}

}  // namespace

SurvivalDataset gen_model1(const SimConfig& config, RandomStream& rng) {
  if (config.model != SimModel::kModel1) throw ArgumentError("gen_model1 needs a model1 config");
  return gen_static(config, rng);
}

SurvivalDataset gen_model2(const SimConfig& config, RandomStream& rng) {
  if (config.model != SimModel::kModel2) throw ArgumentError("gen_model2 needs a model2 config");
  return gen_static(config, rng);
}

LongitudinalDataset gen_time_varying(const SimConfig& config, RandomStream& rng) {
  config.check();
  RandomStream cov_stream = rng.split(kCovariateStream);
  RandomStream event_stream = rng.split(kEventStream);
  const RandomStream path_root = rng.split(kPathStream);
  const Eigen::MatrixXd x0 = gen_correlated_normals(config.n, config.p, config.rho_base, cov_stream);
  const Eigen::Map<const Eigen::VectorXd> beta(config.beta.data(), static_cast<Eigen::Index>(config.p));

  std::vector<LongitudinalSubject> subjects;
  subjects.reserve(config.n);
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    RandomStream path = path_root.split(static_cast<std::uint64_t>(i));
    Eigen::VectorXd x = x0.row(i).transpose();
    double remaining = event_stream.exponential();  // unit-rate cumulative hazard budget
    LongitudinalSubject s;
    double start = 0.0;
    while (true) {
      s.measurements.push_back({start, std::vector<double>(x.data(), x.data() + x.size())});
      const double rate = std::exp(beta.dot(x));
      const double end = std::min(start + 1.0, config.t_max);
      const double piece = rate * (end - start);
      if (remaining <= piece) {
        s.time = start + remaining / rate;
        s.status = 1;
        break;
      }
      remaining -= piece;
      if (end >= config.t_max) {
        s.time = config.t_max;
        s.status = 0;
        break;
      }
      start = end;
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += config.step_sd * path.normal();
    }
    subjects.push_back(std::move(s));
  }
  return LongitudinalDataset(std::move(subjects));
}

SurvivalDataset simulate(const SimConfig& config) {
  RandomStream rng(config.seed);
  switch (config.model) {
    case SimModel::kModel1:
      return gen_model1(config, rng);
    case SimModel::kModel2:
      return gen_model2(config, rng);
    case SimModel::kTimeVarying:
      break;
  }
  throw ArgumentError("time_varying designs produce longitudinal data; use simulate_longitudinal");
}

LongitudinalDataset simulate_longitudinal(const SimConfig& config) {
  if (config.model != SimModel::kTimeVarying)
    throw ArgumentError("simulate_longitudinal needs a time_varying config");
  RandomStream rng(config.seed);
  return gen_time_varying(config, rng);
}

}  // namespace stacksurv
