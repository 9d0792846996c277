#include <algorithm>
#include <numeric>

#include "stacksurv/error.hpp"
#include "stacksurv/learners.hpp"

namespace stacksurv {

namespace {

using Lists = std::vector<std::vector<std::uint32_t>>;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const std::vector<double>& w, const RegressionTree::Options& opt,
              RandomStream* rng, std::vector<RegressionTree::Node>& nodes)
      : x_(x), y_(y), w_(w), opt_(opt), rng_(rng), nodes_(nodes),
        goes_left_(static_cast<std::size_t>(x.rows()), 0) {}

  int build(const Lists& lists, int depth) {
    const auto& rows = lists.front();
    double weight = 0.0, sum = 0.0;
    for (auto r : rows) {
      weight += w_[r];
      sum += w_[r] * y_(r);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].weight = weight;

    bool pure = true;
    for (auto r : rows)
      if (y_(r) != y_(rows.front())) {
        pure = false;
        break;
      }
    if (pure) {
      nodes_[id].value = y_(rows.front());
      return id;
    }
    nodes_[id].value = sum / weight;
    if (depth >= opt_.max_depth || weight < 2.0 * opt_.min_leaf) return id;

    const Split best = find_split(lists, weight, sum);
    if (best.feature < 0) return id;

    for (auto r : rows) goes_left_[r] = x_(r, best.feature) <= best.threshold;
    Lists left(lists.size()), right(lists.size());
    for (std::size_t f = 0; f < lists.size(); ++f) {
      left[f].reserve(lists[f].size());
      right[f].reserve(lists[f].size());
      for (auto r : lists[f]) (goes_left_[r] ? left[f] : right[f]).push_back(r);
    }
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = build(left, depth + 1);
    Lists().swap(left);
    const int r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

 private:
  std::vector<int> candidate_features(std::size_t p) {
    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    const auto mtry = static_cast<std::size_t>(opt_.mtry);
    if (mtry == 0 || mtry >= p) return features;
    if (rng_ == nullptr) throw ArgumentError("feature subsampling requires a random stream");
    for (std::size_t i = 0; i < mtry; ++i)
      std::swap(features[i], features[i + rng_->index(p - i)]);
    features.resize(mtry);
    return features;
  }

  Split find_split(const Lists& lists, double weight, double sum) {
    Split best;
    const double parent = sum * sum / weight;
    for (int f : candidate_features(lists.size())) {
      const auto& order = lists[static_cast<std::size_t>(f)];
      double wl = 0.0, sl = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto r = order[i];
        wl += w_[r];
        sl += w_[r] * y_(r);
        const double v = x_(r, f);
        const double next = x_(order[i + 1], f);
        if (!(next > v)) continue;
        const double wr = weight - wl;
        if (wl < opt_.min_leaf || wr < opt_.min_leaf) continue;
        const double sr = sum - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold < next)) threshold = v;
          best = {f, threshold, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const std::vector<double>& w_;
  const RegressionTree::Options& opt_;
  RandomStream* rng_;
  std::vector<RegressionTree::Node>& nodes_;
  std::vector<char> goes_left_;
};

}  // namespace

std::vector<std::vector<std::uint32_t>> presort_columns(const Eigen::MatrixXd& x) {
  Lists lists(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& order = lists[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return lists;
}

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const std::vector<double>& weights,
                                   const std::vector<std::vector<std::uint32_t>>& sorted,
                                   const Options& options, RandomStream* rng) {
  if (x.rows() == 0 || x.cols() == 0) throw ArgumentError("tree needs at least one row and column");
  Lists lists(sorted.size());
  for (std::size_t f = 0; f < sorted.size(); ++f) {
    lists[f].reserve(sorted[f].size());
    for (auto r : sorted[f])
      if (weights[r] > 0.0) lists[f].push_back(r);
  }
  if (lists.front().empty()) throw ArgumentError("tree needs a row with positive weight");
  RegressionTree tree;
  TreeBuilder(x, y, weights, options, rng, tree.nodes_).build(lists, 0);
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

}  // namespace stacksurv
