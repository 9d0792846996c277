#include "stacksurv/coxph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "stacksurv/error.hpp"
#include "stacksurv/stacker.hpp"

namespace stacksurv {

namespace detail {

double wald_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

Eigen::VectorXd lasso_quadratic_step(const Eigen::VectorXd& beta0, const Eigen::VectorXd& gradient,
                                     const Eigen::MatrixXd& hessian, double lambda) {
  const Eigen::Index p = beta0.size();
  Eigen::VectorXd b = beta0;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);  // b - beta0
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double largest = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const double curvature = -hessian(k, k);
      if (!(curvature > 0.0))
        throw NumericalError("penalized fit: zero curvature in coordinate " + std::to_string(k));
      const double partial = gradient(k) + hessian.row(k).dot(delta) - hessian(k, k) * delta(k);
      const double target = curvature * beta0(k) + partial;
      double next = 0.0;
      if (target > lambda)
        next = (target - lambda) / curvature;
      else if (target < -lambda)
        next = (target + lambda) / curvature;
      largest = std::max(largest, std::abs(next - b(k)));
      b(k) = next;
      delta(k) = next - beta0(k);
    }
    if (largest <= 1e-14 * (1.0 + b.lpNorm<Eigen::Infinity>())) break;
  }
  return b;
}

}  // namespace detail

namespace {

std::vector<std::size_t> event_order(const std::vector<double>& times,
                                     const std::vector<int>& status) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (status[i] == 1) order.push_back(i);
  if (order.empty()) throw ArgumentError("no uncensored records: nothing to fit");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  return order;
}

template <class CovariatesAt>
std::vector<CoxDesign::Block> make_blocks(const std::vector<double>& times,
                                          const std::vector<int>& status, std::size_t p,
                                          CovariatesAt&& covariates_at) {
  std::vector<CoxDesign::Block> blocks;
  for (std::size_t i : event_order(times, status)) {
    const double t = times[i];
    std::vector<std::size_t> members{i};
    for (std::size_t j = 0; j < times.size(); ++j)
      if (j != i && times[j] >= t) members.push_back(j);
    CoxDesign::Block b;
    b.time = t;
    b.anchor = i;
    b.members.resize(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto& x = covariates_at(members[r], t);
      for (std::size_t k = 0; k < p; ++k)
        b.members(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = x[k];
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

double l1_norm(const Eigen::VectorXd& v) { return v.lpNorm<1>(); }

std::string describe_direction(Eigen::VectorXd v) {
  Eigen::Index top = 0;
  v.cwiseAbs().maxCoeff(&top);
  if (v(top) < 0) v = -v;
  std::ostringstream os;
  bool first = true;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) < 1e-8) continue;
    if (!first) os << " + ";
    os << v(k) << "*x" << (k + 1);
    first = false;
  }
  return os.str();
}

// Smallest eigenpair of the (symmetric) information matrix.
bool information_singular(const Eigen::MatrixXd& info, Eigen::VectorXd* direction) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const double largest = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues()(0) > 1e-10 * largest) return false;
  if (direction) *direction = eig.eigenvectors().col(0);
  return true;
}

void fill_wald(FitResult& fit, const Eigen::MatrixXd& info) {
  const auto p = fit.coefficients.size();
  fit.std_errors = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  fit.z_scores = fit.std_errors;
  fit.p_values = fit.std_errors;
  if (information_singular(info, nullptr)) return;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  for (Eigen::Index k = 0; k < p; ++k) {
    fit.std_errors(k) = std::sqrt(cov(k, k));
    fit.z_scores(k) = fit.coefficients(k) / fit.std_errors(k);
    fit.p_values(k) = detail::wald_p_value(fit.z_scores(k));
  }
}

}  // namespace

CoxDesign CoxDesign::from(const SurvivalDataset& data) {
  CoxDesign d;
  d.p_ = data.num_features();
  std::vector<double> times;
  for (const auto& r : data.records()) times.push_back(r.time);
  d.blocks_ = make_blocks(times, data.statuses(), d.p_,
                          [&](std::size_t i, double) -> const std::vector<double>& {
                            return data[i].covariates;
                          });
  return d;
}

CoxDesign CoxDesign::from(const LongitudinalDataset& data) {
  CoxDesign d;
  d.p_ = data.num_features();
  std::vector<double> times;
  std::vector<int> status;
  for (const auto& s : data.subjects()) {
    times.push_back(s.time);
    status.push_back(s.status);
  }
  d.blocks_ = make_blocks(times, status, d.p_,
                          [&](std::size_t i, double t) -> const std::vector<double>& {
                            return data[i].covariates_at(t);
                          });
  return d;
}

LogLik cox_loglik(const CoxDesign& design, const Eigen::VectorXd& beta) {
  const auto p = static_cast<Eigen::Index>(design.num_features());
  if (beta.size() != p) throw ArgumentError("beta length differs from covariate count");
  if (!beta.allFinite()) throw ArgumentError("beta must be finite");
  LogLik out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd s1(p);
  Eigen::MatrixXd s2(p, p);
  for (const auto& b : design.blocks()) {
    const Eigen::VectorXd eta = b.members * beta;
    const double shift = eta.maxCoeff();
    const Eigen::VectorXd w = (eta.array() - shift).exp().matrix();
    const double s0 = w.sum();
    s1.noalias() = b.members.transpose() * w;
    s2.noalias() = b.members.transpose() * w.asDiagonal() * b.members;
    const Eigen::VectorXd mean = s1 / s0;
    out.value += eta(0) - (shift + std::log(s0));
    out.gradient += b.members.row(0).transpose() - mean;
    out.hessian -= s2 / s0 - mean * mean.transpose();
  }
  return out;
}

LogLik cox_loglik(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
  return cox_loglik(CoxDesign::from(data), beta);
}

FitResult cox_fit(const CoxDesign& design, const CoxOptions& options) {
  const auto p = static_cast<Eigen::Index>(design.num_features());
  FitResult fit;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  LogLik cur = cox_loglik(design, fit.coefficients);

  Eigen::VectorXd direction;
  if (information_singular(-cur.hessian, &direction))
    throw NumericalError("singular information matrix at beta = 0 along direction " +
                         describe_direction(direction) +
                         " (a covariate combination is constant within all risk sets)");

  for (fit.iterations = 1; fit.iterations <= options.max_iter; ++fit.iterations) {
    const Eigen::MatrixXd info = -cur.hessian;
    if (information_singular(info, &direction)) {
      fit.message = "information became singular while coefficients grew; the likelihood "
                    "appears monotone (coefficient estimates diverging)";
      break;
    }
    const Eigen::VectorXd step = info.ldlt().solve(cur.gradient);

    double scale = 1.0;
    LogLik next = cox_loglik(design, fit.coefficients + step);
    int halvings = 0;
    while (!(next.value >= cur.value) && halvings < 40) {
      scale /= 2.0;
      ++halvings;
      next = cox_loglik(design, fit.coefficients + scale * step);
    }
    if (!(next.value >= cur.value)) {
      // No ascent left at machine precision.
      fit.converged = cur.gradient.lpNorm<Eigen::Infinity>() < 1e-6;
      break;
    }
    const double change = std::abs(next.value - cur.value) / (std::abs(cur.value) + options.tol);
    const double moved = (scale * step).lpNorm<Eigen::Infinity>();
    fit.coefficients += scale * step;
    cur = std::move(next);
    if (change < options.tol && moved < 1e-5 * (1.0 + fit.coefficients.lpNorm<Eigen::Infinity>())) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, options.max_iter);
  if (!fit.converged && fit.message.empty())
    fit.message = "no convergence within " + std::to_string(options.max_iter) +
                  " iterations; coefficient norm " +
                  std::to_string(fit.coefficients.norm()) + " (possible monotone likelihood)";
  fit.log_likelihood = cur.value;
  fill_wald(fit, -cur.hessian);
  return fit;
}

FitResult cox_fit(const SurvivalDataset& data, const CoxOptions& options) {
  return cox_fit(CoxDesign::from(data), options);
}

FitResult cox_fit(const LongitudinalDataset& data, const CoxOptions& options) {
  return cox_fit(CoxDesign::from(data), options);
}

double cox_lambda_max(const CoxDesign& design) {
  const auto p = static_cast<Eigen::Index>(design.num_features());
  return cox_loglik(design, Eigen::VectorXd::Zero(p)).gradient.lpNorm<Eigen::Infinity>();
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
  if (!(lambda_max > 0.0) || count < 1 || !(ratio > 0.0 && ratio <= 1.0))
    throw ArgumentError("lambda grid needs lambda_max > 0, count >= 1, ratio in (0, 1]");
  std::vector<double> grid;
  for (int i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid.push_back(lambda_max * std::pow(ratio, frac));
  }
  return grid;
}

PenalizedPath cox_fit_l1(const CoxDesign& design, const std::vector<double>& lambdas,
                         const CoxOptions& options) {
  const auto p = static_cast<Eigen::Index>(design.num_features());
  PenalizedPath path;
  path.lambda_grid = lambdas;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw ArgumentError("penalty must be nonnegative");
    LogLik cur = cox_loglik(design, beta);
    double objective = cur.value - lambda * l1_norm(beta);
    int iter = 0;
    for (iter = 1; iter <= options.max_iter; ++iter) {
      const Eigen::VectorXd target = detail::lasso_quadratic_step(beta, cur.gradient, cur.hessian, lambda);
      const Eigen::VectorXd direction = target - beta;
      double scale = 1.0;
      Eigen::VectorXd trial = target;
      LogLik next = cox_loglik(design, trial);
      double next_obj = next.value - lambda * l1_norm(trial);
      for (int h = 0; h < 40 && !(next_obj >= objective); ++h) {
        scale /= 2.0;
        trial = beta + scale * direction;
        next = cox_loglik(design, trial);
        next_obj = next.value - lambda * l1_norm(trial);
      }
      if (!(next_obj >= objective)) break;
      const double change = std::abs(next_obj - objective) / (std::abs(objective) + options.tol);
      const double moved = (trial - beta).lpNorm<Eigen::Infinity>();
      beta = trial;
      cur = std::move(next);
      objective = next_obj;
      if (change < options.tol && moved < 1e-7 * (1.0 + beta.lpNorm<Eigen::Infinity>())) break;
    }
    path.coefficients.push_back(beta);
    path.iterations.push_back(iter);
  }
  return path;
}

PenalizedPath cox_fit_l1(const SurvivalDataset& data, const std::vector<double>& lambdas,
                         const CoxOptions& options) {
  return cox_fit_l1(CoxDesign::from(data), lambdas, options);
}

BaselineHazard breslow_baseline(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != data.num_features())
    throw ArgumentError("beta length differs from covariate count");
  std::map<double, double> deaths_at;
  for (const auto& r : data.records())
    if (r.status == 1) deaths_at[r.time] += 1.0;
  if (deaths_at.empty()) throw ArgumentError("no uncensored records: no baseline hazard");

  const Eigen::VectorXd risk = (data.covariate_matrix() * beta).array().exp().matrix();
  BaselineHazard h;
  double cumulative = 0.0;
  for (const auto& [t, d] : deaths_at) {
    double denom = 0.0, n = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].time >= t) {
        denom += risk(static_cast<Eigen::Index>(i));
        n += 1.0;
      }
    const double inc = d / denom;
    cumulative += inc;
    h.times.push_back(t);
    h.increments.push_back(inc);
    h.cumulative.push_back(cumulative);
    h.at_risk.push_back(n);
    h.deaths.push_back(d);
  }
  return h;
}

SurvivalCurve cox_survival_curve(const FitResult& fit, const SurvivalDataset& data,
                                 std::span<const double> x_new, double level) {
  if (!fit.converged) throw ArgumentError("cox_survival_curve needs a converged fit");
  if (x_new.size() != data.num_features())
    throw ArgumentError("x_new length differs from covariate count");
  const auto base = breslow_baseline(data, fit.coefficients);
  const double relative_risk =
      std::exp(Eigen::Map<const Eigen::VectorXd>(x_new.data(), fit.coefficients.size())
                   .dot(fit.coefficients));
  std::vector<double> hazards;
  for (double inc : base.increments) hazards.push_back(-std::expm1(-inc * relative_risk));
  return curve_from_hazards(base.times, std::move(hazards), base.at_risk, base.deaths, level);
}

}  // namespace stacksurv
