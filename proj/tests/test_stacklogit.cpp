#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stacksurv/coxph.hpp"
#include "stacksurv/error.hpp"
#include "stacksurv/simgen.hpp"
#include "stacksurv/stacklogit.hpp"
#include "test_util.hpp"

using namespace stacksurv;
using testutil::make_dataset;

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

SurvivalDataset model1(std::uint64_t seed) {
  auto cfg = SimConfig::model1();
  cfg.seed = seed;
  return simulate(cfg);
}

// Per-stratum sums of fitted probabilities and the full binomial gradient.
struct Check {
  std::vector<double> prob_sum, events;
  Eigen::VectorXd grad_beta;
};

Check evaluate(const LogisticFit& fit, const StackedData& s) {
  Check c;
  c.prob_sum.assign(s.num_strata(), 0.0);
  c.events.assign(s.num_strata(), 0.0);
  c.grad_beta = Eigen::VectorXd::Zero(fit.coefficients.size());
  const auto x = s.covariates();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const auto q = s.stratum_of_row[r];
    if (fit.dropped[q]) continue;
    const auto row = static_cast<Eigen::Index>(r);
    const double pi = sigmoid(fit.intercepts(static_cast<Eigen::Index>(q)) + x.row(row).dot(fit.coefficients));
    c.prob_sum[q] += pi;
    c.events[q] += s.response(row);
    c.grad_beta += (s.response(row) - pi) * x.row(row).transpose();
  }
  return c;
}

}  // namespace

TEST_SUITE("stacklogit") {

TEST_CASE("zero covariates give the intercept-only closed form") {
  const auto d = make_dataset({1, 2, 3, 4, 5}, {1, 1, 0, 1, 1}, {{0}, {0}, {0}, {0}, {0}});
  const auto s = stack(d);
  const auto fit = logistic_fit(s);
  CHECK(fit.coefficients(0) == 0.0);
  for (std::size_t q = 0; q < s.num_strata(); ++q) {
    const double n = static_cast<double>(s.strata[q].size);
    if (n == 1) {
      CHECK(fit.dropped[q]);
      continue;
    }
    CHECK(fit.intercepts(static_cast<Eigen::Index>(q)) == doctest::Approx(std::log(1.0 / (n - 1))));
  }
}

TEST_CASE("size-1 stratum of the worked example is dropped") {
  const auto d = make_dataset({1, 2, 3}, {1, 0, 1}, {{0.3, -1.2}, {1.7, 0.4}, {-0.6, 2.5}});
  const auto fit = logistic_fit(stack(d));
  REQUIRE(fit.num_intercepts() == 2);
  CHECK_FALSE(fit.dropped[0]);
  CHECK(fit.dropped[1]);
  CHECK(std::isinf(fit.intercepts(1)));
  CHECK(fit.intercepts(1) > 0);
  REQUIRE(!fit.warnings.empty());
  CHECK(fit.warnings[0].find("excluded") != std::string::npos);
}

TEST_CASE("Model 1 coefficients are close to Cox") {
  for (std::uint64_t seed : {301u, 302u, 303u}) {
    const auto d = model1(seed);
    const auto cox = cox_fit(d);
    const auto fit = logistic_fit(stack(d));
    REQUIRE(fit.converged);
    CHECK((fit.coefficients - cox.coefficients).cwiseAbs().maxCoeff() < 0.1);
    for (Eigen::Index k = 0; k < 6; ++k) {
      CHECK(fit.std_errors(k) > 0);
      CHECK(fit.p_values(k) >= 0);
      CHECK(fit.p_values(k) <= 1);
    }
  }
}

TEST_CASE("optimality: stratum probabilities sum to event counts and gradient vanishes") {
  const auto d = testutil::random_dataset(55, 80, 3, 0.3, 6);
  const auto s = stack(d);
  LogisticOptions opts;
  opts.tol = 1e-14;
  const auto fit = logistic_fit(s, opts);
  REQUIRE(fit.converged);
  const auto c = evaluate(fit, s);
  for (std::size_t q = 0; q < s.num_strata(); ++q)
    if (!fit.dropped[q]) CHECK(std::abs(c.prob_sum[q] - c.events[q]) < 1e-8);
  CHECK(c.grad_beta.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(fit.deviance == doctest::Approx(-2 * fit.log_likelihood));
}

TEST_CASE("log-likelihood ascends across iterations") {
  const auto s = stack(model1(304));
  double prev = -INFINITY;
  for (int it = 1; it <= 6; ++it) {
    LogisticOptions opt;
    opt.max_iter = it;
    const auto fit = logistic_fit(s, opt);
    CHECK(fit.log_likelihood >= prev);
    prev = fit.log_likelihood;
  }
}

TEST_CASE("permuting rows within strata leaves the fit unchanged") {
  const auto s = stack(model1(305));
  StackedData t = s;
  RandomStream rng(3);
  for (const auto& st : s.strata) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < st.size; ++i) idx.push_back(static_cast<Eigen::Index>(st.first_row + i));
    std::vector<Eigen::Index> perm = idx;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      t.design.row(idx[i]) = s.design.row(perm[i]);
      t.response(idx[i]) = s.response(perm[i]);
      t.subject_of_row[static_cast<std::size_t>(idx[i])] = s.subject_of_row[static_cast<std::size_t>(perm[i])];
    }
  }
  const auto a = logistic_fit(s);
  const auto b = logistic_fit(t);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("penalized path: zero at lambda_max, unpenalized at zero") {
  const auto s = stack(model1(306));
  const double lmax = logistic_lambda_max(s);
  const auto path = logistic_fit_l1(s, {lmax * 1.01, 0.0});
  CHECK(path.coefficients[0].cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t q = 0; q < s.num_strata(); ++q) {
    const double n = static_cast<double>(s.strata[q].size);
    if (n > 1)
      CHECK(path.intercepts[0](static_cast<Eigen::Index>(q)) == doctest::Approx(std::log(1.0 / (n - 1))));
  }
  const auto fit = logistic_fit(s);
  CHECK((path.coefficients[1] - fit.coefficients).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("logistic lambda_max equals Cox lambda_max for distinct times") {
  const auto d = model1(307);
  CHECK(logistic_lambda_max(stack(d)) == doctest::Approx(cox_lambda_max(CoxDesign::from(d))).epsilon(1e-12));
}

TEST_CASE("stacked-logistic survival curve is a valid survival function") {
  const auto s = stack(model1(308));
  const auto fit = logistic_fit(s);
  const std::vector<double> x(6, 0.3);
  const auto c = logistic_survival_curve(fit, s, x);
  REQUIRE(c.size() == s.num_strata());
  for (std::size_t q = 0; q < c.size(); ++q) {
    CHECK(c.survival[q] >= 0);
    CHECK(c.survival[q] <= 1);
    if (q) CHECK(c.survival[q] <= c.survival[q - 1]);
  }
  CHECK(c.survival.back() < c.survival.front());
}

TEST_CASE("equivalence at eta = 0 has a closed form") {
  std::vector<double> t;
  std::vector<int> st;
  std::vector<std::vector<double>> x;
  for (int i = 0; i < 200; ++i) {
    t.push_back(i + 1.0);
    st.push_back(1);
    x.push_back({0.0});
  }
  const auto rows = verify_equivalence(make_dataset(t, st, x), Eigen::VectorXd::Zero(1));
  REQUIRE(rows.size() == 200);
  double prev_gap = 0.0;
  for (const auto& r : rows) {
    const double n = static_cast<double>(r.size);
    CHECK(r.approx_intercept == doctest::Approx(-std::log(n)).epsilon(1e-14));
    if (r.size == 1) {
      CHECK(std::isinf(r.exact_intercept));
      CHECK(std::isnan(r.gap));
      continue;
    }
    CHECK(r.exact_intercept == doctest::Approx(std::log(1.0 / (n - 1))).epsilon(1e-12));
    const double gap = std::abs(r.exact_intercept - r.approx_intercept);
    CHECK(gap >= prev_gap);
    prev_gap = gap;
  }
  CHECK(std::abs(rows.front().exact_intercept - rows.front().approx_intercept) < 0.01);
}

TEST_CASE("equivalence on Model 1 data") {
  const auto d = model1(309);
  const auto fit = cox_fit(d);
  const auto rows = verify_equivalence(d, fit.coefficients);
  CHECK(rows.size() == d.num_events());
  const auto& big = rows.front();
  CHECK(std::abs(big.exact_intercept - big.approx_intercept) < 0.01);
  const auto sets = build_risk_sets(d);
  REQUIRE(sets.size() == rows.size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const auto& r = rows[q];
    REQUIRE(r.size == sets[q].size());
    if (r.size < 2) continue;
    double total = 0;
    for (auto j : sets[q].members) {
      double eta = 0;
      for (Eigen::Index k = 0; k < 6; ++k) eta += d[j].covariates[static_cast<std::size_t>(k)] * fit.coefficients(k);
      total += sigmoid(r.exact_intercept + eta);
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
    CHECK(r.exact_intercept >= r.approx_intercept);
  }
  std::ostringstream os;
  write_equivalence_csv(os, rows);
  CHECK(os.str().rfind("time,size,exact_intercept,approx_intercept,intercept_gap,contribution_gap\n", 0) == 0);
}

TEST_CASE("logistic fit rejects a centered stack") {
  const auto d = model1(310);
  CHECK_THROWS_AS(logistic_fit(stack_centered(d)), ArgumentError);
}

}
