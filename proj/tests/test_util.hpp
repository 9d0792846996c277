#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stacksurv/rng.hpp"
#include "stacksurv/survdata.hpp"

namespace testutil {

using stacksurv::SurvivalDataset;
using stacksurv::SurvivalRecord;

inline SurvivalDataset make_dataset(const std::vector<double>& times, const std::vector<int>& status,
                                    const std::vector<std::vector<double>>& x) {
  std::vector<SurvivalRecord> recs;
  for (std::size_t i = 0; i < times.size(); ++i) recs.push_back({x[i], times[i], status[i]});
  return SurvivalDataset(std::move(recs));
}

// Small random dataset; tie_grid > 0 rounds times to multiples of 1/tie_grid.
inline SurvivalDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t p,
                                      double censor_prob = 0.3, int tie_grid = 0) {
  stacksurv::RandomStream rng(seed);
  std::vector<SurvivalRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    SurvivalRecord r;
    for (std::size_t k = 0; k < p; ++k) r.covariates.push_back(rng.normal());
    r.time = 0.05 + rng.exponential();
    if (tie_grid > 0) r.time = std::ceil(r.time * tie_grid) / tie_grid;
    r.status = rng.uniform() < censor_prob ? 0 : 1;
    recs.push_back(std::move(r));
  }
  recs[0].status = 1;
  return SurvivalDataset(std::move(recs));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testutil
