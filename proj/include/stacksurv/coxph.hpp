#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stacksurv/curves.hpp"
#include "stacksurv/survdata.hpp"

namespace stacksurv {

/*!
 * Risk-set layout for the partial likelihood: one block per uncensored
 * subject (in event-time order), holding the covariate rows of every member
 * of its risk set. Row 0 of each block is the subject that failed.
 *
 * Built from static data, or from longitudinal data where each member
 * contributes its last measurement at or before the block's event time.
 * Ties follow the Breslow convention: tied events each get a block and each
 * block's denominator runs over the full risk set.
 */
class CoxDesign {
 public:
  struct Block {
    double time = 0.0;
    std::size_t anchor = 0;
    Eigen::MatrixXd members;  // row 0 is the anchor
  };

  static CoxDesign from(const SurvivalDataset& data);
  static CoxDesign from(const LongitudinalDataset& data);

  std::size_t num_features() const { return p_; }
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  std::size_t p_ = 0;
  std::vector<Block> blocks_;
};

struct LogLik {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

LogLik cox_loglik(const CoxDesign& design, const Eigen::VectorXd& beta);
LogLik cox_loglik(const SurvivalDataset& data, const Eigen::VectorXd& beta);

struct CoxOptions {
  double tol = 1e-9;
  int max_iter = 50;
};

struct FitResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd z_scores;
  Eigen::VectorXd p_values;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// Newton-Raphson with step halving from beta = 0. Wald inference from the
// inverse observed information.
FitResult cox_fit(const CoxDesign& design, const CoxOptions& options = {});
FitResult cox_fit(const SurvivalDataset& data, const CoxOptions& options = {});
FitResult cox_fit(const LongitudinalDataset& data, const CoxOptions& options = {});

struct PenalizedPath {
  std::vector<double> lambda_grid;
  std::vector<Eigen::VectorXd> coefficients;
  // Per-stratum intercepts (stacked-logistic paths only).
  std::vector<Eigen::VectorXd> intercepts;
  std::vector<int> iterations;
};

// Largest useful penalty: max_k |d logL / d beta_k| at beta = 0.
double cox_lambda_max(const CoxDesign& design);
// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count = 50, double ratio = 0.01);

// Maximizes logL(beta) - lambda * |beta|_1 along the grid, warm-started.
PenalizedPath cox_fit_l1(const CoxDesign& design, const std::vector<double>& lambdas,
                         const CoxOptions& options = {});
PenalizedPath cox_fit_l1(const SurvivalDataset& data, const std::vector<double>& lambdas,
                         const CoxOptions& options = {});

// Breslow cumulative baseline hazard at the distinct event times.
struct BaselineHazard {
  std::vector<double> times;
  std::vector<double> increments;
  std::vector<double> cumulative;
  std::vector<double> at_risk;
  std::vector<double> deaths;
};

BaselineHazard breslow_baseline(const SurvivalDataset& data, const Eigen::VectorXd& beta);

// S(t | x) = exp(-Lambda0(t) exp(x' beta)) at the distinct event times. The
// band uses Greenwood's formula on the training risk-set counts.
SurvivalCurve cox_survival_curve(const FitResult& fit, const SurvivalDataset& data,
                                 std::span<const double> x_new, double level = 0.95);

// Shared helpers for Newton-type fitters.
namespace detail {
// Two-sided normal p-value for a Wald statistic.
double wald_p_value(double z);
// Coordinate descent on the concave model g'd + d'Hd/2 - lambda |beta0 + d|_1
// starting from d = 0; returns the new coefficient vector.
Eigen::VectorXd lasso_quadratic_step(const Eigen::VectorXd& beta0, const Eigen::VectorXd& gradient,
                                     const Eigen::MatrixXd& hessian, double lambda);
}  // namespace detail

}  // namespace stacksurv
