#include <doctest.h>

#include <sstream>

#include "stacksurv/error.hpp"
#include "stacksurv/simgen.hpp"
#include "stacksurv/survdata.hpp"
#include "test_util.hpp"

using namespace stacksurv;

TEST_SUITE("survdata") {

TEST_CASE("single-row CSV parses") {
  std::istringstream in("time,status,x1\n1.0,1,0.5");
  const auto d = read_csv(in);
  REQUIRE(d.size() == 1);
  CHECK(d.num_features() == 1);
  CHECK(d[0].time == 1.0);
  CHECK(d[0].status == 1);
  CHECK(d[0].covariates[0] == 0.5);
  CHECK(d.feature_names()[0] == "x1");
}

TEST_CASE("status outside {0,1} is a validation error") {
  std::istringstream in("time,status,x1\n1.0,2,0.5\n");
  CHECK_THROWS_AS(read_csv(in), ValidationError);
}

TEST_CASE("non-numeric cell reports row and column") {
  std::istringstream in("time,status,x1\n1.0,1,0.5\n2.0,0,abc\n");
  try {
    read_csv(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("x1") != std::string::npos);
  }
}

TEST_CASE("missing required column is a parse error") {
  std::istringstream in("t,status,x1\n1.0,1,0.5\n");
  CHECK_THROWS_AS(read_csv(in), ParseError);
}

TEST_CASE("scientific notation and column reordering are accepted") {
  std::istringstream in("x1,status,time\n-2.5e-3,0,1e1\n");
  const auto d = read_csv(in);
  CHECK(d[0].time == 10.0);
  CHECK(d[0].covariates[0] == -0.0025);
}

TEST_CASE("simulated data round-trips bit-exactly") {
  auto cfg = SimConfig::model1();
  cfg.seed = 99;
  const auto d = simulate(cfg);
  REQUIRE(d.size() == 200);
  REQUIRE(d.num_features() == 6);
  std::stringstream buf;
  write_csv(buf, d);
  const auto back = read_csv(buf);
  CHECK(back == d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].time == d[i].time);
    for (std::size_t k = 0; k < 6; ++k) CHECK(back[i].covariates[k] == d[i].covariates[k]);
  }
}

TEST_CASE("longitudinal data round-trips bit-exactly") {
  auto cfg = SimConfig::time_varying();
  cfg.n = 30;
  cfg.seed = 4;
  const auto d = simulate_longitudinal(cfg);
  std::stringstream buf;
  write_longitudinal_csv(buf, d);
  const auto back = read_longitudinal_csv(buf);
  CHECK(back == d);
}

TEST_CASE("tied death times are reported") {
  const auto d = testutil::make_dataset({1, 1}, {1, 1}, {{0.1}, {0.2}});
  const auto w = validate(d);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == "tied death times: 1 group of size 2");
}

TEST_CASE("constant covariate is reported") {
  const auto d = testutil::make_dataset({1, 2, 3}, {1, 0, 1}, {{0.1, 5}, {0.2, 5}, {0.3, 5}});
  const auto w = validate(d);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == "zero-variance covariate: x2");
}

TEST_CASE("all-censored data is reported") {
  const auto d = testutil::make_dataset({1, 2}, {0, 0}, {{0.1}, {0.2}});
  const auto w = validate(d);
  REQUIRE(!w.empty());
  CHECK(w[0] == "all records censored");
}

TEST_CASE("continuous Model 1 draws have no tie warnings") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto cfg = SimConfig::model1();
    cfg.seed = s;
    const auto d = simulate(cfg);
    for (const auto& w : validate(d)) CHECK(w.find("tied") == std::string::npos);
  }
}

TEST_CASE("validate leaves the dataset unchanged") {
  const auto d = testutil::random_dataset(3, 12, 2);
  const auto copy = d;
  validate(d);
  CHECK(d == copy);
}

TEST_CASE("covariates_at uses the closed inequality") {
  LongitudinalSubject s{{{0.0, {1.0}}, {1.0, {2.0}}}, 2.0, 1};
  CHECK(s.covariates_at(0.5)[0] == 1.0);
  CHECK(s.covariates_at(1.0)[0] == 2.0);
  CHECK(s.covariates_at(1.7)[0] == 2.0);
}

TEST_CASE("longitudinal subjects must start at time 0") {
  LongitudinalSubject s;
  s.measurements.push_back({0.5, {1.0}});
  s.time = 1.0;
  s.status = 1;
  std::vector<LongitudinalSubject> subs{s};
  CHECK_THROWS_AS(LongitudinalDataset{subs}, ValidationError);
}

TEST_CASE("negative time is rejected") {
  CHECK_THROWS_AS(testutil::make_dataset({-1.0}, {1}, {{0.0}}), ValidationError);
}

}
