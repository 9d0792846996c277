#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stacksurv/coxph.hpp"
#include "stacksurv/curves.hpp"
#include "stacksurv/stacker.hpp"

namespace stacksurv {

struct LogisticOptions {
  double tol = 1e-9;
  int max_iter = 100;
};

// No-intercept logistic regression on an indicator-form stack: one free
// intercept per stratum plus shared covariate coefficients.
struct LogisticFit {
  Eigen::VectorXd intercepts;  // +inf / -inf for dropped strata
  std::vector<bool> dropped;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd z_scores;
  Eigen::VectorXd p_values;
  double log_likelihood = 0.0;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::size_t num_intercepts() const { return static_cast<std::size_t>(intercepts.size()); }
};

/*!
 * Joint Newton (IRLS) over intercepts and coefficients. The intercept block
 * of the Hessian is diagonal, so each step solves only a p x p Schur system.
 *
 * Strata whose responses are all equal (a lone event row, typically the
 * last death) have unbounded intercepts; they are excluded from the fit,
 * reported in `dropped` and `warnings`, and their intercept is set to +inf
 * (all events) or -inf (no events).
 */
LogisticFit logistic_fit(const StackedData& stacked, const LogisticOptions& options = {});

// Smallest penalty at which every covariate coefficient is zero.
double logistic_lambda_max(const StackedData& stacked);

// L1 penalty on covariate coefficients only; intercepts are unpenalized.
PenalizedPath logistic_fit_l1(const StackedData& stacked, const std::vector<double>& lambdas,
                              const LogisticOptions& options = {});

// Survival curve for x_new from the fitted intercepts:
// h_q = sigmoid(intercept_q + x_new' beta).
SurvivalCurve logistic_survival_curve(const LogisticFit& fit, const StackedData& stacked,
                                      std::span<const double> x_new, double level = 0.95);

// Per-risk-set comparison of the profiled logistic intercept with its
// closed-form approximation.
struct EquivalenceRow {
  double time = 0.0;
  std::size_t size = 0;
  double exact_intercept = 0.0;   // root of sum_j sigmoid(b + eta_j) = 1
  double approx_intercept = 0.0;  // -log sum_j exp(eta_j)
  double gap = 0.0;               // profiled binomial term - (partial-likelihood term - 1)
};

// Rows follow risk-set order. Size-1 risk sets report exact = +inf, gap = NaN.
std::vector<EquivalenceRow> verify_equivalence(const SurvivalDataset& data,
                                               const Eigen::VectorXd& beta);

// CSV: time,size,exact_intercept,approx_intercept,intercept_gap,contribution_gap
void write_equivalence_csv(std::ostream& out, const std::vector<EquivalenceRow>& rows);

}  // namespace stacksurv
