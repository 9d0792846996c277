#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stacksurv/rng.hpp"
#include "stacksurv/survdata.hpp"

namespace stacksurv {

enum class SimModel { kModel1, kModel2, kTimeVarying };

std::string to_string(SimModel model);
SimModel parse_sim_model(const std::string& name);

/*!
 * Simulation design.
 *
 * model1:       rate(x) = exp(beta' x)
 * model2:       rate(x) = exp(b1 x5 x6 + b2 x1 x2 + b3 x3^2 + b4 x4 + b5 x5 + b6 x6)
 * time_varying: rate(t) = exp(beta' x(t)), x(t) a Gaussian random walk
 *               updated at integer times
 *
 * Covariates are standard normal with corr(x_j, x_k) = rho_base^|j-k|.
 * Event times beyond t_max are censored at t_max.
 */
struct SimConfig {
  SimModel model = SimModel::kModel1;
  std::size_t n = 200;
  std::size_t p = 6;
  std::vector<double> beta;
  double rho_base = 0.2;
  double t_max = 1.5;
  double step_sd = 0.5;  // time_varying only
  std::uint64_t seed = 1;

  static SimConfig model1();
  static SimConfig model2();
  static SimConfig time_varying();

  // Throws ArgumentError when the fields violate the design's constraints.
  void check() const;
};

// Stream ids used to split a generator's RandomStream.
inline constexpr std::uint64_t kCovariateStream = 1;
inline constexpr std::uint64_t kEventStream = 2;
inline constexpr std::uint64_t kPathStream = 3;

// n x p rows from N(0, Sigma), Sigma_jk = rho_base^|j-k|, via Cholesky.
Eigen::MatrixXd gen_correlated_normals(std::size_t n, std::size_t p, double rho_base,
                                       RandomStream& rng);

// Hazard rate of model1/model2 at covariates x.
double true_rate(const SimConfig& config, std::span<const double> x);
// Exact survival exp(-t * rate(x)) for model1/model2.
double true_survival(const SimConfig& config, std::span<const double> x, double t);

SurvivalDataset gen_model1(const SimConfig& config, RandomStream& rng);
SurvivalDataset gen_model2(const SimConfig& config, RandomStream& rng);
LongitudinalDataset gen_time_varying(const SimConfig& config, RandomStream& rng);

// Dispatches on config.model for static designs, using RandomStream(config.seed).
SurvivalDataset simulate(const SimConfig& config);
LongitudinalDataset simulate_longitudinal(const SimConfig& config);

}  // namespace stacksurv
