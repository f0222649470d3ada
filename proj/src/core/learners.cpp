#include "leaper/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leaper/error.hpp"
#include "leaper/parallel.hpp"
#include "leaper/rng.hpp"

namespace leaper {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) fail("ragged matrix rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void check_training_input(const Matrix& X, std::span<const double> y,
                          std::span<const double> weights) {
  if (X.rows == 0 || y.empty()) fail("empty training set");
  if (X.rows != y.size())
    fail("feature matrix has " + std::to_string(X.rows) + " rows but " +
         std::to_string(y.size()) + " targets");
  if (!weights.empty() && weights.size() != y.size())
    fail("weight vector length does not match the number of rows");
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t j = 0; j < X.cols; ++j)
      if (!std::isfinite(X(i, j)))
        fail("non-finite feature value at row " + std::to_string(i) + ", column " +
             std::to_string(j));
    if (!std::isfinite(y[i])) fail("non-finite target at row " + std::to_string(i));
  }
  if (!weights.empty()) {
    bool any_positive = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!std::isfinite(weights[i]) || weights[i] < 0.0)
        fail("weight at row " + std::to_string(i) + " must be finite and non-negative");
      any_positive = any_positive || weights[i] > 0.0;
    }
    if (!any_positive) fail("at least one sample weight must be positive");
  }
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const double> y, std::span<const double> w,
              const TreeParams& params, std::uint64_t seed)
      : X_(X), y_(y), w_(w), params_(params), rng_(seed) {
    features_.resize(X.cols);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  RegressionTree build() {
    tree_.n_features = X_.cols;
    std::vector<std::size_t> rows(X_.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  double weight(std::size_t i) const { return w_.empty() ? 1.0 : w_[i]; }

  std::int32_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double total_w = 0.0, sum_wy = 0.0;
    for (auto i : rows) {
      total_w += weight(i);
      sum_wy += weight(i) * y_[i];
    }
    double mean;
    if (total_w > 0.0) {
      mean = sum_wy / total_w;
    } else {
      mean = 0.0;
      for (auto i : rows) mean += y_[i];
      mean /= static_cast<double>(rows.size());
    }
    double sse = 0.0;
    for (auto i : rows) sse += weight(i) * (y_[i] - mean) * (y_[i] - mean);

    {
      auto& node = tree_.nodes[id];
      node.value = mean;
      node.weight = total_w;
      node.sse = sse;
      node.count = static_cast<std::uint32_t>(rows.size());
    }

    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (depth_reached || rows.size() < 2 * params_.min_samples_leaf || !(sse > 0.0)) return id;

    auto split = best_split(rows, mean, sse);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto i : rows) (X_(i, split.feature) <= split.threshold ? left : right).push_back(i);

    tree_.nodes[id].feature = static_cast<std::int32_t>(split.feature);
    tree_.nodes[id].threshold = split.threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double sse = 0.0;
  };

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = X_.cols;
    if (!params_.max_features || *params_.max_features >= d) return features_;
    std::vector<std::size_t> pool = features_;
    const std::size_t m = *params_.max_features;
    for (std::size_t k = 0; k < m; ++k) std::swap(pool[k], pool[k + rng_.below(d - k)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& rows, double mean, double parent_sse) {
    const double tol = kSplitTieTolerance * parent_sse;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = params_.min_samples_leaf;
    Split best;
    best.sse = parent_sse - tol;  // must beat the parent to count

    std::vector<std::size_t> order(rows);
    for (auto f : candidate_features()) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = X_(a, f), xb = X_(b, f);
        return xa < xb || (xa == xb && a < b);
      });
      // Residuals about the node mean keep the running sums well conditioned.
      double total_w = 0.0, total_wr = 0.0, total_wrr = 0.0;
      for (auto i : order) {
        const double r = y_[i] - mean, wi = weight(i);
        total_w += wi;
        total_wr += wi * r;
        total_wrr += wi * r * r;
      }
      double lw = 0.0, lwr = 0.0, lwrr = 0.0;
      for (std::size_t p = 1; p < n; ++p) {
        const auto i = order[p - 1];
        const double r = y_[i] - mean, wi = weight(i);
        lw += wi;
        lwr += wi * r;
        lwrr += wi * r * r;
        const double a = X_(order[p - 1], f), b = X_(order[p], f);
        if (!(a < b)) continue;
        if (p < min_leaf || n - p < min_leaf) continue;
        const double rw = total_w - lw;
        if (!(lw > 0.0) || !(rw > 0.0)) continue;
        const double rwr = total_wr - lwr, rwrr = total_wrr - lwrr;
        const double sse = std::max(0.0, lwrr - lwr * lwr / lw) + std::max(0.0, rwrr - rwr * rwr / rw);
        if (sse < best.sse - (best.found ? tol : 0.0)) {
          double threshold = a + (b - a) / 2.0;
          if (!(threshold < b)) threshold = a;
          best = Split{true, f, threshold, sse};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const double> y_;
  std::span<const double> w_;
  const TreeParams& params_;
  Rng rng_;
  std::vector<std::size_t> features_;
  RegressionTree tree_;
};

void check_params(const TreeParams& params, std::size_t dim) {
  if (params.min_samples_leaf < 1) fail("min_samples_leaf must be ≥ 1");
  if (params.max_features) {
    if (*params.max_features < 1) fail("max_features must be ≥ 1");
    if (*params.max_features > dim)
      fail("max_features " + std::to_string(*params.max_features) +
           " exceeds feature dimension " + std::to_string(dim));
  }
}

}  // namespace

std::size_t RegressionTree::leaf_of(std::span<const double> x) const {
  if (x.size() != n_features)
    fail("feature vector has dimension " + std::to_string(x.size()) + ", tree expects " +
         std::to_string(n_features));
  std::size_t id = 0;
  while (!nodes[id].is_leaf()) {
    const auto& node = nodes[id];
    id = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
  }
  return id;
}

double RegressionTree::predict(std::span<const double> x) const { return nodes[leaf_of(x)].value; }

RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> y,
                                   std::span<const double> weights, const TreeParams& params,
                                   std::uint64_t seed) {
  check_training_input(X, y, weights);
  check_params(params, X.cols);
  return TreeBuilder(X, y, weights, params, seed).build();
}

double RandomForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

RandomForest fit_random_forest(const Matrix& X, std::span<const double> y,
                               const TreeParams& params, std::size_t n_trees, bool bootstrap,
                               std::uint64_t seed) {
  check_training_input(X, y, {});
  check_params(params, X.cols);
  if (n_trees < 1) fail("n_trees must be ≥ 1");

  RandomForest forest;
  forest.bootstrap = bootstrap;
  forest.seed = seed;
  forest.trees.resize(n_trees);
  parallel_for(n_trees, [&](std::size_t t) {
    const auto tree_seed = derive_seed(seed, t);
    if (!bootstrap) {
      forest.trees[t] = TreeBuilder(X, y, {}, params, tree_seed).build();
      return;
    }
    Rng rng(derive_seed(tree_seed, 0xb007));
    std::vector<std::size_t> draw(X.rows);
    for (auto& d : draw) d = rng.below(X.rows);
    Matrix Xb = X.select_rows(draw);
    std::vector<double> yb(draw.size());
    for (std::size_t i = 0; i < draw.size(); ++i) yb[i] = y[draw[i]];
    forest.trees[t] = TreeBuilder(Xb, yb, {}, params, tree_seed).build();
  });
  return forest;
}

FeatureImportance feature_importance(const RandomForest& forest, std::size_t n_features) {
  FeatureImportance out;
  out.scores.assign(n_features, 0.0);
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = tree.nodes[node.left];
      const auto& r = tree.nodes[node.right];
      const double decrease = node.sse - l.sse - r.sse;
      if (static_cast<std::size_t>(node.feature) < n_features)
        out.scores[node.feature] += std::max(0.0, decrease);
    }
  }
  double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  if (!(total > 0.0)) {
    out.no_splits = true;
    if (n_features > 0) out.scores.assign(n_features, 1.0 / static_cast<double>(n_features));
    return out;
  }
  for (auto& s : out.scores) s /= total;
  return out;
}

double GradientBoostedModel::predict(std::span<const double> x) const {
  return predict_partial(x, stages.size());
}

double GradientBoostedModel::predict_partial(std::span<const double> x, std::size_t n) const {
  double value = init_value;
  const std::size_t count = std::min(n, stages.size());
  for (std::size_t t = 0; t < count; ++t) value += learning_rate * stages[t].predict(x);
  return value;
}

GradientBoostedModel fit_gradient_boosting(const Matrix& X, std::span<const double> y,
                                           const TreeParams& params, std::size_t n_stages,
                                           double learning_rate, std::uint64_t seed) {
  check_training_input(X, y, {});
  check_params(params, X.cols);
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must lie in (0, 1]");

  GradientBoostedModel model;
  model.learning_rate = learning_rate;
  model.init_value = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  model.stages.reserve(n_stages);

  std::vector<double> current(y.size(), model.init_value);
  std::vector<double> residual(y.size());
  for (std::size_t t = 0; t < n_stages; ++t) {
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - current[i];
    auto tree = TreeBuilder(X, residual, {}, params, derive_seed(seed, t)).build();
    for (std::size_t i = 0; i < y.size(); ++i)
      current[i] += learning_rate * tree.predict(X.row(i));
    model.stages.push_back(std::move(tree));
  }
  return model;
}

}  // namespace leaper
