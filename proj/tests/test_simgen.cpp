#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stacksurv/error.hpp"
#include "stacksurv/simgen.hpp"

using namespace stacksurv;

namespace {

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

// Asymptotic Kolmogorov distribution tail.
double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k)
    sum += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

double censored_fraction(const SurvivalDataset& d) {
  return 1.0 - static_cast<double>(d.num_events()) / static_cast<double>(d.size());
}

}  // namespace

TEST_SUITE("simgen") {

TEST_CASE("independent columns when rho_base is zero") {
  RandomStream rng(1);
  const auto x = gen_correlated_normals(10000, 4, 0.0, rng);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index k = j + 1; k < 4; ++k) CHECK(std::abs(corr(x.col(j), x.col(k))) < 0.1);
}

TEST_CASE("unit variances and the target correlation") {
  RandomStream rng(2);
  const auto x = gen_correlated_normals(10000, 6, 0.2, rng);
  for (Eigen::Index k = 0; k < 6; ++k) {
    const double v = (x.col(k).array() - x.col(k).mean()).square().sum() / 9999.0;
    CHECK(v >= 0.9);
    CHECK(v <= 1.1);
  }
  CHECK(std::abs(corr(x.col(0), x.col(1)) - 0.2) < 0.05);
  CHECK(std::abs(corr(x.col(0), x.col(2)) - 0.04) < 0.05);
}

TEST_CASE("zero linear predictor censors with probability exp(-1.5)") {
  auto cfg = SimConfig::model1();
  cfg.beta.assign(6, 0.0);
  cfg.n = 10000;
  cfg.seed = 3;
  const auto d = simulate(cfg);
  CHECK(std::abs(censored_fraction(d) - std::exp(-1.5)) < 0.015);
}

TEST_CASE("censoring vanishes as the horizon grows") {
  auto cfg = SimConfig::model1();
  cfg.beta.assign(6, 0.0);
  cfg.n = 2000;
  cfg.t_max = 50.0;
  CHECK(censored_fraction(simulate(cfg)) == 0.0);
}

TEST_CASE("Model 1 censoring fraction envelope over 100 seeds") {
  for (std::uint64_t s = 1; s <= 100; ++s) {
    auto cfg = SimConfig::model1();
    cfg.seed = s;
    const double f = censored_fraction(simulate(cfg));
    CHECK(f >= 0.1);
    CHECK(f <= 0.45);
  }
}

TEST_CASE("generated records respect the horizon") {
  auto cfg = SimConfig::model2();
  cfg.seed = 4;
  const auto d = simulate(cfg);
  for (const auto& r : d.records()) {
    CHECK(r.time > 0.0);
    if (r.status == 0) CHECK(r.time == cfg.t_max);
    else CHECK(r.time <= cfg.t_max);
  }
}

TEST_CASE("Model 2 rate formula") {
  const auto cfg = SimConfig::model2();
  CHECK(cfg.t_max == 2.0);
  const std::vector<double> zero(6, 0.0);
  CHECK(true_rate(cfg, zero) == 1.0);
  const auto d = [&] {
    auto c = cfg;
    c.seed = 5;
    return simulate(c);
  }();
  const auto& b = cfg.beta;
  for (const auto& r : d.records()) {
    const auto& x = r.covariates;
    const double expected =
        std::exp(b[0] * x[4] * x[5] + b[1] * x[0] * x[1] + b[2] * x[2] * x[2] + b[3] * x[3] + b[4] * x[4] + b[5] * x[5]);
    CHECK(std::abs(true_rate(cfg, x) - expected) <= 1e-12 * expected);
  }
  std::vector<double> x3{0, 0, 1.3, 0, 0, 0}, x3n{0, 0, -1.3, 0, 0, 0};
  CHECK(true_rate(cfg, x3) == true_rate(cfg, x3n));
}

TEST_CASE("true survival is exponential in t") {
  const auto cfg = SimConfig::model1();
  const std::vector<double> x{1, 0, 0, 1, 0, 0};
  CHECK(true_survival(cfg, x, 0.7) == doctest::Approx(std::exp(-0.7 * std::exp(-0.75))));
}

TEST_CASE("uncensored times follow the truncated exponential") {
  auto cfg = SimConfig::model1();
  cfg.beta.assign(6, 0.0);
  cfg.n = 10000;
  cfg.seed = 6;
  const auto d = simulate(cfg);
  std::vector<double> t;
  for (const auto& r : d.records())
    if (r.status) t.push_back(r.time);
  std::sort(t.begin(), t.end());
  const double norm = 1.0 - std::exp(-cfg.t_max);
  double dmax = 0.0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = (1.0 - std::exp(-t[i])) / norm;
    dmax = std::max({dmax, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  CHECK(ks_p_value(dmax, t.size()) > 0.01);
}

TEST_CASE("generators are reproducible and seed-sensitive") {
  auto cfg = SimConfig::model2();
  cfg.seed = 7;
  CHECK(simulate(cfg) == simulate(cfg));
  auto other = cfg;
  other.seed = 8;
  CHECK_FALSE(simulate(cfg) == simulate(other));
  auto tv = SimConfig::time_varying();
  tv.seed = 7;
  CHECK(simulate_longitudinal(tv) == simulate_longitudinal(tv));
}

TEST_CASE("zero step sd reduces the time-varying design to Model 1") {
  auto tv = SimConfig::time_varying();
  tv.step_sd = 0.0;
  tv.t_max = 1.5;
  tv.seed = 9;
  auto m1 = SimConfig::model1();
  m1.beta = tv.beta;
  m1.seed = 9;
  const auto a = simulate_longitudinal(tv).baseline();
  const auto b = simulate(m1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].status == b[i].status);
    CHECK(a[i].time == doctest::Approx(b[i].time).epsilon(1e-12));
    CHECK(a[i].covariates == b[i].covariates);
  }
}

TEST_CASE("piecewise sampler survives the first interval at the closed-form rate") {
  auto tv = SimConfig::time_varying();
  tv.n = 10000;
  tv.seed = 10;
  const auto d = simulate_longitudinal(tv);
  double observed = 0, expected = 0;
  for (const auto& s : d.subjects()) {
    observed += s.time > 1.0 ? 1.0 : 0.0;
    const auto& x0 = s.measurements.front().covariates;
    double eta = 0;
    for (std::size_t k = 0; k < x0.size(); ++k) eta += tv.beta[k] * x0[k];
    expected += std::exp(-std::exp(eta));
  }
  CHECK(std::abs(observed - expected) / 10000.0 < 0.02);
}

TEST_CASE("time-varying measurements sit at unit times before the terminal time") {
  auto tv = SimConfig::time_varying();
  tv.seed = 11;
  const auto d = simulate_longitudinal(tv);
  for (const auto& s : d.subjects()) {
    for (std::size_t j = 0; j < s.measurements.size(); ++j) {
      CHECK(s.measurements[j].time == static_cast<double>(j));
      CHECK(s.measurements[j].time <= s.time);
    }
    if (s.status == 0) CHECK(s.time == tv.t_max);
  }
}

TEST_CASE("configuration checks") {
  auto c = SimConfig::model1();
  c.n = 1;
  CHECK_THROWS_AS(c.check(), ArgumentError);
  c = SimConfig::model1();
  c.rho_base = 1.0;
  CHECK_THROWS_AS(c.check(), ArgumentError);
  c = SimConfig::model1();
  c.beta.pop_back();
  CHECK_THROWS_AS(c.check(), ArgumentError);
  c = SimConfig::model2();
  c.p = 5;
  c.beta.pop_back();
  CHECK_THROWS_AS(c.check(), ArgumentError);
  CHECK(parse_sim_model("model2") == SimModel::kModel2);
  CHECK_THROWS_AS(parse_sim_model("model3"), ArgumentError);
  CHECK_THROWS_AS(simulate(SimConfig::time_varying()), ArgumentError);
}

}
