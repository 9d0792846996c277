#include <doctest.h>

#include <cmath>
#include <vector>
#include <set>

#include "stacksurv/rng.hpp"

using stacksurv::RandomStream;

TEST_SUITE("rng") {

TEST_CASE("same seed gives the same sequence") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("split streams are distinct and do not advance the parent") {
  RandomStream parent(7);
  auto s1 = parent.split(1);
  auto s2 = parent.split(2);
  auto s1b = parent.split(1);
  CHECK(s1.next() == s1b.next());
  CHECK(s1.next() != s2.next());
  RandomStream fresh(7);
  CHECK(parent.next() == fresh.next());
}

TEST_CASE("uniform draws lie in [0, 1) and have the right mean") {
  RandomStream r(3);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal draws have unit variance") {
  RandomStream r(11);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("index covers the range uniformly") {
  RandomStream r(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

}
