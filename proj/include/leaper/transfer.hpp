#pragma once

// Few-shot adaptation of a source BaseModel to a target environment.
//
// Both transfer learners see the augmented input x' = [model input || f_s(x)].
// Inside transfer() they regress the log-ratio ln(y / f_s(x)); the target
// prediction is f_s(x) * exp(h(x')), i.e. a learned non-linear correction
// applied to the source model's prediction.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "leaper/base_model.hpp"
#include "leaper/domain.hpp"
#include "leaper/learners.hpp"

namespace leaper {

struct AugmentedRow {
  std::vector<double> x;  // normalized selected features, then predict_base
  double label = 0.0;
};

// Labels are the samples' responses for the base model's metric.
std::vector<AugmentedRow> augment(const BaseModel& base, std::span<const Sample> samples);

// ---------------------------------------------------------------------------
// Instance-transfer boosting (two-population TrAdaBoost for regression).

struct TrAdaBoostParams {
  std::size_t rounds = 20;
  TreeParams weak = TreeParams{3, 1, std::nullopt};
  // Share of features offered to each weak split; < 1 makes rounds seed-dependent.
  double feature_fraction = 0.7;

  bool operator==(const TrAdaBoostParams&) const = default;
};

struct TrAdaBoostModel {
  std::vector<RegressionTree> learners;
  std::vector<double> betas;  // beta_t per recorded round
  bool constant = false;      // all target labels identical
  double constant_value = 0.0;
  bool stopped_early = false;

  // Not serialized: instance weights after each recorded round (source rows
  // first, then target rows).
  std::size_t n_source = 0;
  std::vector<std::vector<double>> weight_history;

  // Weighted median of the later half of the recorded learners, weights ln(1/beta).
  double predict(std::span<const double> x) const;

  bool same_predictor(const TrAdaBoostModel& other) const;
};

TrAdaBoostModel fit_tradaboost(std::span<const AugmentedRow> source_rows,
                               std::span<const AugmentedRow> target_rows, std::size_t rounds,
                               const TreeParams& weak_params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaussian process regression, RBF kernel, constant prior mean.

struct KernelParams {
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;

  bool operator==(const KernelParams&) const = default;
};

inline constexpr double kMaxJitter = 1e-4;

struct GpPosterior {
  double mean;
  double variance;
};

class GaussianProcessModel {
 public:
  GaussianProcessModel() = default;

  // Factorizes K + (noise + jitter) I, escalating jitter up to kMaxJitter.
  static GaussianProcessModel fit(Matrix X, std::vector<double> y, const KernelParams& params);
  // Rebuilds a model with a known jitter (used when loading).
  static GaussianProcessModel restore(Matrix X, std::vector<double> y, const KernelParams& params,
                                      double jitter);

  GpPosterior posterior(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return posterior(x).mean; }

  const Matrix& inputs() const { return X_; }
  const std::vector<double>& targets() const { return y_; }
  const KernelParams& params() const { return params_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }

  double kernel(std::span<const double> a, std::span<const double> b) const;

 private:
  bool factorize(double jitter);

  Matrix X_;
  std::vector<double> y_;
  KernelParams params_;
  double prior_mean_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;  // lower Cholesky factor
  Eigen::VectorXd alpha_;
};

GaussianProcessModel fit_gp(std::span<const AugmentedRow> rows, const KernelParams& params);
GpPosterior gp_posterior(const GaussianProcessModel& gp, std::span<const double> x);

// ---------------------------------------------------------------------------
// Transfer procedure.

enum class TransferLearnerKind { TrAdaBoost, GaussianProcess };
std::string_view to_string(TransferLearnerKind kind);
TransferLearnerKind parse_transfer_learner(std::string_view text);

enum class SelectionMode { LoocvOnShots, Holdout };

struct TransferOptions {
  std::size_t max_iterations = 5;
  SelectionMode selection = SelectionMode::LoocvOnShots;
  const Dataset* holdout = nullptr;  // required for SelectionMode::Holdout
  std::uint64_t seed = 0;
  TrAdaBoostParams tradaboost;
  KernelParams gp;
};

struct SelectionEntry {
  std::size_t iteration;
  TransferLearnerKind learner;
  double score;  // MRE
};

struct TransferModel {
  std::shared_ptr<const BaseModel> base;
  TransferLearnerKind chosen = TransferLearnerKind::GaussianProcess;
  std::variant<TrAdaBoostModel, GaussianProcessModel> learner;
  double offset = 0.0;  // mean shot log-ratio; the learner fits the remainder
  std::size_t chosen_iteration = 0;
  std::vector<SelectionEntry> selection_report;
  std::size_t few_shot_size = 0;
  SelectionMode selection = SelectionMode::LoocvOnShots;
  std::vector<std::string> warnings;

  // Learner output in log-ratio space for an augmented input.
  double learner_output(std::span<const double> augmented) const;
};

// The few-shot set: labeled target samples (typically a handful).
struct FewShotSet {
  std::string env_id;
  std::vector<Sample> samples;
};

TransferModel transfer(std::shared_ptr<const BaseModel> base, const FewShotSet& shots,
                       const Dataset& source_doe, const TransferOptions& options);

double predict_target(const TransferModel& model, const ApplicationProfile& profile,
                      const Configuration& config);

// Log-ratio mapping between responses and learner targets.
double to_log_ratio(double response, double base_prediction);
double from_log_ratio(double value, double base_prediction);

}  // namespace leaper
