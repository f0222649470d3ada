#pragma once

// Source-environment predictor: feature assembly, min-max normalization,
// importance-based feature selection, cross-validated tuning and the
// random-forest + gradient-boosting ensemble.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leaper/domain.hpp"
#include "leaper/learners.hpp"

namespace leaper {

struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;

  static Normalizer fit(const Matrix& X);
  // Scales into [0, 1], clamping out-of-range values; constant features map to 0.
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& X) const;

  bool operator==(const Normalizer&) const = default;
};

struct FeatureSelection {
  std::vector<std::size_t> indices;
  std::size_t k = 0;
  bool no_signal = false;  // constant target: fell back to the first k features

  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& X) const;

  bool operator==(const FeatureSelection&) const = default;
};

inline constexpr std::size_t kDefaultFeatureCount = 100;

// Ranks features with a probe forest (default parameters) and keeps the top k.
FeatureSelection select_features(const Matrix& X, std::span<const double> y, std::size_t k,
                                 std::uint64_t seed);

// How many features each split may consider, relative to the dimension.
enum class FeatureRule { Third, Sqrt, All, Fixed };

struct ForestCandidate {
  std::size_t n_trees = 100;
  FeatureRule rule = FeatureRule::Third;
  std::size_t fixed_features = 0;  // used by FeatureRule::Fixed
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> max_depth;
  bool bootstrap = true;

  TreeParams tree_params(std::size_t dim) const;
  bool operator==(const ForestCandidate&) const = default;
};

struct BoostingCandidate {
  std::size_t n_stages = 200;
  double learning_rate = 0.1;
  std::optional<std::size_t> max_depth = 3;
  std::size_t min_samples_leaf = 1;

  TreeParams tree_params() const;
  bool operator==(const BoostingCandidate&) const = default;
};

struct HyperGrid {
  std::vector<ForestCandidate> forests;
  std::vector<BoostingCandidate> boosting;

  // RF n_trees {100, 300} x max_features {ceil(d/3), ceil(sqrt d)};
  // GBT stages {100, 300} x lr {0.05, 0.1} x depth {2, 3}.
  static HyperGrid default_grid();
  static HyperGrid single(ForestCandidate forest, BoostingCandidate boosting);
};

struct CvScore {
  std::size_t candidate;
  double mean_mre;
};

struct CvReport {
  std::size_t folds = 0;
  std::vector<CvScore> forest_scores;
  std::vector<CvScore> boosting_scores;
  std::size_t chosen_forest = 0;
  std::size_t chosen_boosting = 0;
};

struct BaseModel {
  std::string env_id;
  Metric metric = Metric::ExecTimeMs;
  ConfigurationSpace space;
  std::vector<std::string> profile_names;
  Normalizer normalizer;
  FeatureSelection selection;
  RandomForest forest;
  GradientBoostedModel gbm;
  ForestCandidate forest_params;
  BoostingCandidate boosting_params;
  CvReport cv_report;

  // Normalized, selected feature vector for one input.
  std::vector<double> model_input(const ApplicationProfile& profile,
                                  const Configuration& config) const;
  // Unclamped ensemble mean on a model input.
  double raw_predict(std::span<const double> model_input) const;
};

// [profile values || encoded configuration]
std::vector<double> assemble_features(const ApplicationProfile& profile,
                                      const Configuration& config,
                                      const ConfigurationSpace& space);

// Same, but checks the profile against a training schema first.
std::vector<double> assemble_features(const ApplicationProfile& profile,
                                      const Configuration& config,
                                      const ConfigurationSpace& space,
                                      std::span<const std::string> schema);

struct TrainOptions {
  Metric metric = Metric::ExecTimeMs;
  HyperGrid grid = HyperGrid::default_grid();
  std::size_t folds = 5;
  std::size_t k_features = kDefaultFeatureCount;
  std::uint64_t seed = 0;
};

BaseModel train_base_model(const Dataset& dataset, const TrainOptions& options);

double predict_base(const BaseModel& model, const ApplicationProfile& profile,
                    const Configuration& config);

// Fold id per row: seeded shuffle, then contiguous chunks.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

}  // namespace leaper
