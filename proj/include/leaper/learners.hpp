#pragma once

// Regression learners built from scratch: weighted CART trees, bagged random
// forests and squared-error gradient boosting.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace leaper {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }

  // New matrix holding the given rows, in order (repeats allowed).
  Matrix select_rows(std::span<const std::size_t> indices) const;
};

struct TreeParams {
  std::optional<std::size_t> max_depth;     // nullopt = unlimited
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> max_features;  // nullopt = all features per split

  bool operator==(const TreeParams&) const = default;
};

// A split candidate replaces the incumbent only when its child SSE is lower by
// more than this fraction of the parent SSE; otherwise the earlier candidate
// (lower feature index, then lower threshold) is kept.
inline constexpr double kSplitTieTolerance = 1e-10;

class RegressionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;   // weighted mean of the routed training targets
    double weight = 0.0;  // total training weight routed here
    double sse = 0.0;     // weighted squared deviation from value
    std::uint32_t count = 0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;
  std::size_t n_features = 0;

  double predict(std::span<const double> x) const;
  std::size_t leaf_of(std::span<const double> x) const;

  bool operator==(const RegressionTree&) const = default;
};

// Empty weights means uniform.
RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> y,
                                   std::span<const double> weights, const TreeParams& params,
                                   std::uint64_t seed);

struct RandomForest {
  std::vector<RegressionTree> trees;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  double predict(std::span<const double> x) const;
  bool operator==(const RandomForest&) const = default;
};

RandomForest fit_random_forest(const Matrix& X, std::span<const double> y,
                               const TreeParams& params, std::size_t n_trees, bool bootstrap,
                               std::uint64_t seed);

struct FeatureImportance {
  std::vector<double> scores;  // sums to 1
  bool no_splits = false;      // true when no tree ever split; scores are then uniform
};

// Mean decrease in weighted SSE per feature, normalized.
FeatureImportance feature_importance(const RandomForest& forest, std::size_t n_features);

struct GradientBoostedModel {
  double init_value = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> stages;

  double predict(std::span<const double> x) const;
  // Prediction using only the first n stages.
  double predict_partial(std::span<const double> x, std::size_t n) const;

  bool operator==(const GradientBoostedModel&) const = default;
};

GradientBoostedModel fit_gradient_boosting(const Matrix& X, std::span<const double> y,
                                           const TreeParams& params, std::size_t n_stages,
                                           double learning_rate, std::uint64_t seed);

// Input checks shared by every learner: shape agreement, finiteness, weights.
void check_training_input(const Matrix& X, std::span<const double> y,
                          std::span<const double> weights);

}  // namespace leaper
