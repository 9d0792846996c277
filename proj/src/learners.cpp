#include "stacksurv/learners.hpp"

#include <cmath>

#include "stacksurv/error.hpp"

namespace stacksurv {

Eigen::VectorXd Model::predict_rows(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  Eigen::VectorXd row(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    row = x.row(i).transpose();
    out(i) = predict(row);
  }
  return out;
}

double LinearModel::predict(std::span<const double> x) const {
  double v = 0.0;
  for (Eigen::Index k = 0; k < coef_.size(); ++k) v += coef_(k) * x[static_cast<std::size_t>(k)];
  return v;
}

double ForestModel::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

double BoostedModel::predict(std::span<const double> x) const {
  return predict_partial(x, trees_.size());
}

double BoostedModel::predict_partial(std::span<const double> x, std::size_t rounds) const {
  double v = initial_;
  for (std::size_t t = 0; t < rounds && t < trees_.size(); ++t)
    v += shrinkage_ * trees_[t].predict(x);
  return v;
}

double MlpModel::predict(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> in(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd hidden = (w1_ * in + b1_).array().tanh().matrix();
  return w2_.dot(hidden) + b2_;
}

double MlpModel::loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      Gradient* grad) const {
  const auto n = static_cast<double>(x.rows());
  const Eigen::MatrixXd hidden =
      ((x * w1_.transpose()).rowwise() + b1_.transpose()).array().tanh().matrix();
  const Eigen::VectorXd residual = (hidden * w2_).array() + b2_ - y.array();
  const double mse = residual.squaredNorm() / n;
  if (grad != nullptr) {
    const Eigen::VectorXd r = residual * (2.0 / n);
    grad->w2 = hidden.transpose() * r;
    grad->b2 = r.sum();
    const Eigen::MatrixXd delta =
        ((r * w2_.transpose()).array() * (1.0 - hidden.array().square())).matrix();
    grad->w1 = delta.transpose() * x;
    grad->b1 = delta.colwise().sum().transpose();
  }
  return mse;
}

void MlpModel::step(const Gradient& g, double learning_rate) {
  w1_ -= learning_rate * g.w1;
  b1_ -= learning_rate * g.b1;
  w2_ -= learning_rate * g.w2;
  b2_ -= learning_rate * g.b2;
}

void LearnerConfig::check() const {
  if (!(least_squares.ridge_epsilon >= 0.0))
    throw ArgumentError("ridge_epsilon must be nonnegative");
  if (random_forest.n_trees <= 0 || random_forest.max_depth < 0 ||
      random_forest.min_leaf <= 0 || random_forest.mtry < 0)
    throw ArgumentError("random forest counts must be positive");
  if (gbm.n_trees < 0 || gbm.depth < 0 || gbm.min_leaf <= 0)
    throw ArgumentError("gbm counts must be positive");
  if (!(gbm.shrinkage > 0.0 && gbm.shrinkage <= 1.0))
    throw ArgumentError("gbm shrinkage must lie in (0, 1]");
  if (mlp.hidden_units <= 0 || mlp.epochs < 0 || !(mlp.learning_rate > 0.0))
    throw ArgumentError("mlp hidden units and learning rate must be positive");
}

std::unique_ptr<LinearModel> fit_least_squares(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               double ridge_epsilon) {
  if (x.rows() == 0 || x.cols() == 0) throw ArgumentError("least squares needs data");
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge_epsilon;
  return std::make_unique<LinearModel>(gram.ldlt().solve(x.transpose() * y));
}

std::unique_ptr<ForestModel> fit_random_forest(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               const RandomForestConfig& config) {
  if (x.rows() == 0 || x.cols() == 0) throw ArgumentError("random forest needs data");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<int>(x.cols());
  RegressionTree::Options opt;
  opt.max_depth = config.max_depth;
  opt.min_leaf = config.min_leaf;
  opt.mtry = config.mtry > 0 ? config.mtry : (p + 2) / 3;

  const auto sorted = presort_columns(x);
  const RandomStream base(config.seed);
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_trees));
  std::vector<double> counts(n);
  for (int t = 0; t < config.n_trees; ++t) {
    RandomStream stream = base.split(static_cast<std::uint64_t>(t));
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[stream.index(n)] += 1.0;
    trees.push_back(RegressionTree::fit(x, y, counts, sorted, opt, &stream));
  }
  return std::make_unique<ForestModel>(std::move(trees));
}

std::unique_ptr<BoostedModel> fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      const GbmConfig& config) {
  if (x.rows() == 0 || x.cols() == 0) throw ArgumentError("gbm needs data");
  const double initial = y.mean();
  RegressionTree::Options opt;
  opt.max_depth = config.depth;
  opt.min_leaf = config.min_leaf;

  const auto sorted = presort_columns(x);
  const std::vector<double> weights(static_cast<std::size_t>(x.rows()), 1.0);
  Eigen::VectorXd residual = y.array() - initial;
  std::vector<RegressionTree> trees;
  Eigen::VectorXd row(x.cols());
  for (int t = 0; t < config.n_trees; ++t) {
    auto tree = RegressionTree::fit(x, residual, weights, sorted, opt, nullptr);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      row = x.row(i).transpose();
      residual(i) -= config.shrinkage *
                     tree.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
    trees.push_back(std::move(tree));
  }
  return std::make_unique<BoostedModel>(initial, config.shrinkage, std::move(trees));
}

MlpModel init_mlp(std::size_t inputs, const MlpConfig& config) {
  const auto h = static_cast<Eigen::Index>(config.hidden_units);
  const auto p = static_cast<Eigen::Index>(inputs);
  RandomStream rng(config.seed);
  auto draw = [&](double bound) { return bound * (2.0 * rng.uniform() - 1.0); };
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(h));
  Eigen::MatrixXd w1(h, p);
  for (Eigen::Index j = 0; j < h; ++j)
    for (Eigen::Index k = 0; k < p; ++k) w1(j, k) = draw(in_bound);
  Eigen::VectorXd b1(h);
  for (Eigen::Index j = 0; j < h; ++j) b1(j) = draw(in_bound);
  Eigen::VectorXd w2(h);
  for (Eigen::Index j = 0; j < h; ++j) w2(j) = draw(out_bound);
  const double b2 = draw(out_bound);
  return MlpModel(std::move(w1), std::move(b1), std::move(w2), b2);
}

std::unique_ptr<MlpModel> fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const MlpConfig& config) {
  if (x.rows() == 0 || x.cols() == 0) throw ArgumentError("mlp needs data");
  auto model = std::make_unique<MlpModel>(init_mlp(static_cast<std::size_t>(x.cols()), config));
  MlpModel::Gradient grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = model->loss(x, y, &grad);
    if (!std::isfinite(loss))
      throw NumericalError("mlp training diverged (non-finite loss at epoch " +
                           std::to_string(epoch) + "); lower the learning rate");
    model->step(grad, config.learning_rate);
  }
  if (!std::isfinite(model->loss(x, y, nullptr)))
    throw NumericalError("mlp training diverged; lower the learning rate");
  return model;
}

namespace {

class NullLearner final : public Learner {
 public:
  std::string name() const override { return "null"; }
  std::unique_ptr<Model> fit(const Eigen::MatrixXd&, const Eigen::VectorXd&) const override {
    return std::make_unique<ZeroModel>();
  }
};

class LeastSquaresLearner final : public Learner {
 public:
  explicit LeastSquaresLearner(LeastSquaresConfig c) : c_(c) {}
  std::string name() const override { return "ls"; }
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const override {
    return fit_least_squares(x, y, c_.ridge_epsilon);
  }

 private:
  LeastSquaresConfig c_;
};

class ForestLearner final : public Learner {
 public:
  explicit ForestLearner(RandomForestConfig c) : c_(c) {}
  std::string name() const override { return "rf"; }
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const override {
    return fit_random_forest(x, y, c_);
  }

 private:
  RandomForestConfig c_;
};

class GbmLearner final : public Learner {
 public:
  explicit GbmLearner(GbmConfig c) : c_(c) {}
  std::string name() const override { return "gbm"; }
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const override {
    return fit_gbm(x, y, c_);
  }

 private:
  GbmConfig c_;
};

class MlpLearner final : public Learner {
 public:
  explicit MlpLearner(MlpConfig c) : c_(c) {}
  std::string name() const override { return "mlp"; }
  std::unique_ptr<Model> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const override {
    return fit_mlp(x, y, c_);
  }

 private:
  MlpConfig c_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(const std::string& kind, const LearnerConfig& config) {
  config.check();
  if (kind == "null") return std::make_unique<NullLearner>();
  if (kind == "ls") return std::make_unique<LeastSquaresLearner>(config.least_squares);
  if (kind == "rf") return std::make_unique<ForestLearner>(config.random_forest);
  if (kind == "gbm") return std::make_unique<GbmLearner>(config.gbm);
  if (kind == "mlp") return std::make_unique<MlpLearner>(config.mlp);
  throw ArgumentError("unknown learner '" + kind + "'");
}

}  // namespace stacksurv
