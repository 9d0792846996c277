#include "stacksurv/stacklogit.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "stacksurv/error.hpp"

namespace stacksurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + exp(u)) without overflow.
double log1pexp(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// Strata that keep a finite intercept, with their row lists.
struct Problem {
  const StackedData* data = nullptr;
  std::vector<std::size_t> kept;            // stratum ids
  std::vector<std::vector<Eigen::Index>> rows;  // per kept stratum
  std::vector<bool> dropped;
  std::vector<double> dropped_intercept;
  std::vector<std::string> warnings;
  Eigen::Index p = 0;

  explicit Problem(const StackedData& sd) : data(&sd), p(static_cast<Eigen::Index>(sd.num_features)) {
    if (sd.form != StackForm::kIndicator)
      throw ArgumentError("logistic fit expects an indicator-form stack");
    const std::size_t m = sd.num_strata();
    std::vector<std::vector<Eigen::Index>> all(m);
    std::vector<double> events(m, 0.0);
    for (std::size_t r = 0; r < sd.rows(); ++r) {
      const auto q = sd.stratum_of_row[r];
      all[q].push_back(static_cast<Eigen::Index>(r));
      events[q] += sd.response(static_cast<Eigen::Index>(r));
    }
    dropped.assign(m, false);
    dropped_intercept.assign(m, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      const double n = static_cast<double>(all[q].size());
      if (events[q] == 0.0 || events[q] == n) {
        dropped[q] = true;
        dropped_intercept[q] = events[q] == 0.0 ? -kInf : kInf;
        warnings.push_back("stratum " + std::to_string(q + 1) + " (time " +
                           format_double(sd.strata[q].time) + ", size " +
                           std::to_string(all[q].size()) +
                           ") has an unbounded intercept and was excluded");
        continue;
      }
      kept.push_back(q);
      rows.push_back(std::move(all[q]));
    }
    if (kept.empty()) throw ArgumentError("no stratum has both event and non-event rows");
  }

  Eigen::Index m() const { return static_cast<Eigen::Index>(kept.size()); }

  Eigen::VectorXd initial_intercepts() const {
    Eigen::VectorXd a(m());
    for (Eigen::Index q = 0; q < m(); ++q) {
      double events = 0.0;
      for (auto r : rows[static_cast<std::size_t>(q)]) events += data->response(r);
      const double n = static_cast<double>(rows[static_cast<std::size_t>(q)].size());
      a(q) = std::log(events / (n - events));
    }
    return a;
  }

  Eigen::VectorXd full_intercepts(const Eigen::VectorXd& a) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(dropped.size()));
    for (std::size_t q = 0; q < dropped.size(); ++q) out(static_cast<Eigen::Index>(q)) = dropped_intercept[q];
    for (Eigen::Index q = 0; q < m(); ++q) out(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(q)])) = a(q);
    return out;
  }

  double loglik(const Eigen::VectorXd& a, const Eigen::VectorXd& beta) const {
    const auto x = data->covariates();
    double ll = 0.0;
    for (Eigen::Index q = 0; q < m(); ++q)
      for (auto r : rows[static_cast<std::size_t>(q)]) {
        const double u = a(q) + x.row(r).dot(beta);
        ll += data->response(r) * u - log1pexp(u);
      }
    return ll;
  }

  // Gradient and information blocks: info = [[diag(d), b], [b', c]].
  struct Local {
    double ll = 0.0;
    Eigen::VectorXd grad_a, grad_b, d;
    Eigen::MatrixXd b, c;

    Eigen::MatrixXd schur() const { return c - b.transpose() * d.cwiseInverse().asDiagonal() * b; }
    Eigen::VectorXd reduced_gradient() const {
      return grad_b - b.transpose() * grad_a.cwiseQuotient(d);
    }
    Eigen::VectorXd intercept_step(const Eigen::VectorXd& beta_step) const {
      return (grad_a - b * beta_step).cwiseQuotient(d);
    }
  };

  Local local(const Eigen::VectorXd& a, const Eigen::VectorXd& beta) const {
    const auto x = data->covariates();
    Local L;
    L.grad_a = Eigen::VectorXd::Zero(m());
    L.grad_b = Eigen::VectorXd::Zero(p);
    L.d = Eigen::VectorXd::Zero(m());
    L.b = Eigen::MatrixXd::Zero(m(), p);
    L.c = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xr(p);
    for (Eigen::Index q = 0; q < m(); ++q)
      for (auto r : rows[static_cast<std::size_t>(q)]) {
        xr = x.row(r).transpose();
        const double u = a(q) + xr.dot(beta);
        const double y = data->response(r);
        const double pi = sigmoid(u);
        const double w = pi * (1.0 - pi);
        L.ll += y * u - log1pexp(u);
        L.grad_a(q) += y - pi;
        L.grad_b += (y - pi) * xr;
        L.d(q) += w;
        L.b.row(q) += w * xr.transpose();
        L.c.selfadjointView<Eigen::Lower>().rankUpdate(xr, w);
      }
    L.c = L.c.selfadjointView<Eigen::Lower>();
    return L;
  }
};

void fill_wald(LogisticFit& fit, const Eigen::MatrixXd& schur) {
  const auto p = fit.coefficients.size();
  const Eigen::MatrixXd cov = schur.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.std_errors.resize(p);
  fit.z_scores.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    fit.std_errors(k) = std::sqrt(cov(k, k));
    fit.z_scores(k) = fit.coefficients(k) / fit.std_errors(k);
    fit.p_values(k) = detail::wald_p_value(fit.z_scores(k));
  }
}

}  // namespace

LogisticFit logistic_fit(const StackedData& stacked, const LogisticOptions& options) {
  const Problem prob(stacked);
  Eigen::VectorXd a = prob.initial_intercepts();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(prob.p);
  auto cur = prob.local(a, beta);

  LogisticFit fit;
  fit.warnings = prob.warnings;
  for (fit.iterations = 1; fit.iterations <= options.max_iter; ++fit.iterations) {
    const Eigen::MatrixXd schur = cur.schur();
    const Eigen::VectorXd db = schur.ldlt().solve(cur.reduced_gradient());
    const Eigen::VectorXd da = cur.intercept_step(db);
    if (!db.allFinite() || !da.allFinite()) {
      fit.warnings.push_back("Newton system became singular");
      break;
    }
    double scale = 1.0;
    double next_ll = prob.loglik(a + da, beta + db);
    const double slack = 1e-13 * std::abs(cur.ll);
    for (int h = 0; h < 40 && !(next_ll >= cur.ll - slack); ++h) {
      scale /= 2.0;
      next_ll = prob.loglik(a + scale * da, beta + scale * db);
    }
    if (!(next_ll >= cur.ll - slack)) {
      fit.converged = std::max(cur.grad_a.lpNorm<Eigen::Infinity>(),
                               cur.grad_b.lpNorm<Eigen::Infinity>()) < 1e-6;
      break;
    }
    const double change = std::abs(next_ll - cur.ll) / (std::abs(cur.ll) + options.tol);
    const double moved = scale * std::max(da.lpNorm<Eigen::Infinity>(), db.lpNorm<Eigen::Infinity>());
    a += scale * da;
    beta += scale * db;
    cur = prob.local(a, beta);
    if (change < options.tol &&
        moved < 1e-5 * (1.0 + std::max(a.lpNorm<Eigen::Infinity>(), beta.lpNorm<Eigen::Infinity>()))) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, options.max_iter);
  if (!fit.converged) fit.warnings.push_back("logistic fit did not converge");
  fit.intercepts = prob.full_intercepts(a);
  fit.dropped = prob.dropped;
  fit.coefficients = beta;
  fit.log_likelihood = cur.ll;
  fit.deviance = -2.0 * cur.ll;
  fill_wald(fit, cur.schur());
  return fit;
}

double logistic_lambda_max(const StackedData& stacked) {
  const Problem prob(stacked);
  const auto L = prob.local(prob.initial_intercepts(), Eigen::VectorXd::Zero(prob.p));
  return L.reduced_gradient().lpNorm<Eigen::Infinity>();
}

PenalizedPath logistic_fit_l1(const StackedData& stacked, const std::vector<double>& lambdas,
                              const LogisticOptions& options) {
  const Problem prob(stacked);
  PenalizedPath path;
  path.lambda_grid = lambdas;
  Eigen::VectorXd a = prob.initial_intercepts();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(prob.p);
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw ArgumentError("penalty must be nonnegative");
    auto cur = prob.local(a, beta);
    double objective = cur.ll - lambda * beta.lpNorm<1>();
    int iter = 0;
    for (iter = 1; iter <= options.max_iter; ++iter) {
      const Eigen::VectorXd target =
          detail::lasso_quadratic_step(beta, cur.reduced_gradient(), -cur.schur(), lambda);
      const Eigen::VectorXd db = target - beta;
      const Eigen::VectorXd da = cur.intercept_step(db);
      double scale = 1.0;
      double next_obj = prob.loglik(a + da, beta + db) - lambda * (beta + db).lpNorm<1>();
      for (int h = 0; h < 40 && !(next_obj >= objective); ++h) {
        scale /= 2.0;
        next_obj = prob.loglik(a + scale * da, beta + scale * db) -
                   lambda * (beta + scale * db).lpNorm<1>();
      }
      if (!(next_obj >= objective)) break;
      const double change = std::abs(next_obj - objective) / (std::abs(objective) + options.tol);
      const double moved = scale * std::max(da.lpNorm<Eigen::Infinity>(), db.lpNorm<Eigen::Infinity>());
      a += scale * da;
      beta += scale * db;
      objective = next_obj;
      cur = prob.local(a, beta);
      if (change < options.tol &&
          moved < 1e-7 * (1.0 + std::max(a.lpNorm<Eigen::Infinity>(), beta.lpNorm<Eigen::Infinity>())))
        break;
    }
    path.coefficients.push_back(beta);
    path.intercepts.push_back(prob.full_intercepts(a));
    path.iterations.push_back(iter);
  }
  return path;
}

SurvivalCurve logistic_survival_curve(const LogisticFit& fit, const StackedData& stacked,
                                      std::span<const double> x_new, double level) {
  if (x_new.size() != stacked.num_features)
    throw ArgumentError("x_new length differs from covariate count");
  if (fit.num_intercepts() != stacked.num_strata())
    throw ArgumentError("fit and stack disagree on the number of strata");
  const double eta =
      Eigen::Map<const Eigen::VectorXd>(x_new.data(), fit.coefficients.size()).dot(fit.coefficients);
  std::vector<double> times, hazards, at_risk, deaths;
  for (std::size_t q = 0; q < stacked.num_strata(); ++q) {
    times.push_back(stacked.strata[q].time);
    const double a = fit.intercepts(static_cast<Eigen::Index>(q));
    hazards.push_back(std::isinf(a) ? (a > 0 ? 1.0 : 0.0) : sigmoid(a + eta));
  }
  stratum_counts(stacked.strata, at_risk, deaths);
  return curve_from_hazards(std::move(times), std::move(hazards), at_risk, deaths, level);
}

std::vector<EquivalenceRow> verify_equivalence(const SurvivalDataset& data,
                                               const Eigen::VectorXd& beta) {
  const auto design = CoxDesign::from(data);
  if (static_cast<std::size_t>(beta.size()) != design.num_features())
    throw ArgumentError("beta length differs from covariate count");
  std::vector<EquivalenceRow> out;
  for (const auto& block : design.blocks()) {
    const Eigen::VectorXd eta = block.members * beta;
    const double shift = eta.maxCoeff();
    const double log_sum = shift + std::log((eta.array() - shift).exp().sum());

    EquivalenceRow row;
    row.time = block.time;
    row.size = static_cast<std::size_t>(eta.size());
    row.approx_intercept = -log_sum;
    if (row.size == 1) {
      row.exact_intercept = kInf;
      row.gap = std::numeric_limits<double>::quiet_NaN();
      out.push_back(row);
      continue;
    }

    auto excess = [&](double b) {
      double s = 0.0, ds = 0.0;
      for (Eigen::Index j = 0; j < eta.size(); ++j) {
        const double pi = sigmoid(b + eta(j));
        s += pi;
        ds += pi * (1.0 - pi);
      }
      return std::pair{s - 1.0, ds};
    };
    // The approximation always undershoots the root, so it brackets from below.
    double lo = row.approx_intercept;
    double hi = lo + 1.0;
    while (excess(hi).first < 0.0) hi += 2.0 * (hi - lo);
    double b = lo;
    for (int it = 0; it < 200; ++it) {
      const auto [f, df] = excess(b);
      if (f == 0.0) break;
      (f < 0.0 ? lo : hi) = b;
      double next = b - f / df;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - b) <= 1e-15 * (1.0 + std::abs(b))) {
        b = next;
        break;
      }
      b = next;
    }
    row.exact_intercept = b;
    double binomial = b + eta(0);
    for (Eigen::Index j = 0; j < eta.size(); ++j) binomial -= log1pexp(b + eta(j));
    row.gap = binomial - (eta(0) - log_sum - 1.0);
    out.push_back(row);
  }
  return out;
}

void write_equivalence_csv(std::ostream& out, const std::vector<EquivalenceRow>& rows) {
  out << "time,size,exact_intercept,approx_intercept,intercept_gap,contribution_gap\n";
  for (const auto& r : rows)
    out << format_double(r.time) << ',' << r.size << ',' << format_double(r.exact_intercept) << ','
        << format_double(r.approx_intercept) << ','
        << format_double(r.exact_intercept - r.approx_intercept) << ',' << format_double(r.gap)
        << '\n';
}

}  // namespace stacksurv
