#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stacksurv/rng.hpp"

namespace stacksurv {

// A trained squared-error regressor x -> f(x).
class Model {
 public:
  virtual ~Model() = default;
  virtual double predict(std::span<const double> x) const = 0;

  double predict(const Eigen::VectorXd& x) const {
    return predict(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;
};

// f(x) = 0. Used as the null learner: stacked curves reduce to Kaplan-Meier.
class ZeroModel final : public Model {
 public:
  double predict(std::span<const double>) const override { return 0.0; }
};

class LinearModel final : public Model {
 public:
  explicit LinearModel(Eigen::VectorXd coefficients) : coef_(std::move(coefficients)) {}
  double predict(std::span<const double> x) const override;
  const Eigen::VectorXd& coefficients() const { return coef_; }

 private:
  Eigen::VectorXd coef_;
};

// Binary regression tree stored as a flat node array.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double weight = 0.0;  // number of (weighted) training rows in the node
  };

  struct Options {
    int max_depth = 6;
    int min_leaf = 1;
    int mtry = 0;  // features tried per split; 0 means all
  };

  // Rows with weight 0 are ignored; integer weights act as bootstrap
  // multiplicities. `sorted` holds, per feature, row indices ordered by value.
  static RegressionTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const std::vector<double>& weights,
                            const std::vector<std::vector<std::uint32_t>>& sorted,
                            const Options& options, RandomStream* rng);

  double predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<Node> nodes_;
};

// Per-feature row orderings shared by every tree grown on the same matrix.
std::vector<std::vector<std::uint32_t>> presort_columns(const Eigen::MatrixXd& x);

class ForestModel final : public Model {
 public:
  explicit ForestModel(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}
  double predict(std::span<const double> x) const override;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

class BoostedModel final : public Model {
 public:
  BoostedModel(double initial, double shrinkage, std::vector<RegressionTree> trees)
      : initial_(initial), shrinkage_(shrinkage), trees_(std::move(trees)) {}
  double predict(std::span<const double> x) const override;
  // Prediction using only the first `rounds` trees.
  double predict_partial(std::span<const double> x, std::size_t rounds) const;
  std::size_t rounds() const { return trees_.size(); }

 private:
  double initial_;
  double shrinkage_;
  std::vector<RegressionTree> trees_;
};

// x -> w2 . tanh(W1 x + b1) + b2 with a single hidden layer.
class MlpModel final : public Model {
 public:
  MlpModel(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::VectorXd w2, double b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2) {}

  double predict(std::span<const double> x) const override;

  struct Gradient {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;
  };
  // Mean squared error on (x, y) and its gradient with respect to every weight.
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Gradient* grad) const;
  void step(const Gradient& g, double learning_rate);

  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& w2() const { return w2_; }
  double b2() const { return b2_; }
  Eigen::MatrixXd& w1() { return w1_; }
  Eigen::VectorXd& b1() { return b1_; }
  Eigen::VectorXd& w2() { return w2_; }
  double& b2() { return b2_; }

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_;
};

struct LeastSquaresConfig {
  double ridge_epsilon = 1e-8;
};

struct RandomForestConfig {
  int n_trees = 200;
  int max_depth = 6;
  int min_leaf = 5;
  int mtry = 0;  // 0 means ceil(p / 3)
  std::uint64_t seed = 1;
};

struct GbmConfig {
  int n_trees = 300;
  int depth = 2;
  double shrinkage = 0.1;
  int min_leaf = 1;
  std::uint64_t seed = 1;
};

struct MlpConfig {
  int hidden_units = 2;
  int epochs = 2000;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

struct LearnerConfig {
  LeastSquaresConfig least_squares;
  RandomForestConfig random_forest;
  GbmConfig gbm;
  MlpConfig mlp;

  // Throws ArgumentError on nonpositive counts or shrinkage outside (0, 1].
  void check() const;
};

std::unique_ptr<LinearModel> fit_least_squares(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               double ridge_epsilon = 1e-8);
std::unique_ptr<ForestModel> fit_random_forest(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               const RandomForestConfig& config);
std::unique_ptr<BoostedModel> fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      const GbmConfig& config);
// Initial network for a given input dimension, before any training.
MlpModel init_mlp(std::size_t inputs, const MlpConfig& config);
std::unique_ptr<MlpModel> fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const MlpConfig& config);

// fit/predict contract used by the stacked-curve machinery.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Model> fit(const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y) const = 0;
};

// kind: "null", "ls", "rf", "gbm" or "mlp".
std::unique_ptr<Learner> make_learner(const std::string& kind, const LearnerConfig& config);

}  // namespace stacksurv
