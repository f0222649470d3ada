#include "leaper/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "leaper/error.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/rng.hpp"

namespace leaper {

namespace {

constexpr double kRatioFloor = 1e-12;
constexpr double kMinEpsilon = 1e-10;
constexpr double kMinWeight = 1e-300;

Matrix rows_to_matrix(std::span<const AugmentedRow> a, std::span<const AugmentedRow> b = {}) {
  const std::size_t cols = !a.empty() ? a.front().x.size() : (!b.empty() ? b.front().x.size() : 0);
  Matrix X(a.size() + b.size(), cols);
  std::size_t r = 0;
  for (auto part : {a, b})
    for (const auto& row : part) {
      if (row.x.size() != cols) fail("augmented rows have inconsistent dimensions");
      std::copy(row.x.begin(), row.x.end(), X.row(r++).begin());
    }
  return X;
}

}  // namespace

double to_log_ratio(double response, double base_prediction) {
  return std::log(std::max(response, kRatioFloor)) - std::log(std::max(base_prediction, kRatioFloor));
}

double from_log_ratio(double value, double base_prediction) {
  return std::max(base_prediction, kRatioFloor) * std::exp(value);
}

std::vector<AugmentedRow> augment(const BaseModel& base, std::span<const Sample> samples) {
  std::vector<AugmentedRow> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto label = s.response(base.metric);
    if (!label)
      fail("sample " + std::to_string(i) + " lacks metric " + std::string(metric_name(base.metric)));
    AugmentedRow row;
    row.x = base.model_input(s.profile, s.configuration);
    row.x.push_back(clamp_prediction(base.metric, base.raw_predict(row.x)));
    row.label = *label;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

double TrAdaBoostModel::predict(std::span<const double> x) const {
  if (constant) return constant_value;
  if (learners.empty()) fail("boosting model has no learners");
  const std::size_t k = learners.size();
  const std::size_t start = k / 2;  // keeps the last ceil(k/2) rounds
  std::vector<std::pair<double, double>> votes;
  votes.reserve(k - start);
  for (std::size_t t = start; t < k; ++t) {
    const double w = std::max(std::log(1.0 / betas[t]), 1e-12);
    votes.emplace_back(learners[t].predict(x), w);
  }
  std::stable_sort(votes.begin(), votes.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (const auto& v : votes) total += v.second;
  double cumulative = 0.0;
  for (const auto& v : votes) {
    cumulative += v.second;
    if (cumulative >= 0.5 * total) return v.first;
  }
  return votes.back().first;
}

bool TrAdaBoostModel::same_predictor(const TrAdaBoostModel& other) const {
  return learners == other.learners && betas == other.betas && constant == other.constant &&
         constant_value == other.constant_value && stopped_early == other.stopped_early;
}

TrAdaBoostModel fit_tradaboost(std::span<const AugmentedRow> source_rows,
                               std::span<const AugmentedRow> target_rows, std::size_t rounds,
                               const TreeParams& weak_params, std::uint64_t seed) {
  if (rounds < 1) fail("rounds must be ≥ 1");
  if (target_rows.empty()) fail("boosting needs at least one target row");

  TrAdaBoostModel model;
  model.n_source = source_rows.size();
  const double first = target_rows.front().label;
  if (std::all_of(target_rows.begin(), target_rows.end(),
                  [&](const AugmentedRow& r) { return r.label == first; })) {
    model.constant = true;
    model.constant_value = first;
    return model;
  }

  const Matrix X = rows_to_matrix(source_rows, target_rows);
  const std::size_t n_src = source_rows.size();
  const std::size_t n = X.rows;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n_src; ++i) y[i] = source_rows[i].label;
  for (std::size_t i = 0; i < target_rows.size(); ++i) y[n_src + i] = target_rows[i].label;

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  const double beta_src =
      n_src > 0 ? 1.0 / (1.0 + std::sqrt(2.0 * std::log(static_cast<double>(n_src)) /
                                         static_cast<double>(rounds)))
                : 1.0;

  // Errors at rounding level count as a perfect fit; normalizing them by their
  // own maximum would turn floating-point noise into O(1) errors.
  double label_scale = 0.0;
  for (double v : y) label_scale = std::max(label_scale, std::abs(v));
  const double fit_tolerance = 1e-12 * (1.0 + label_scale);

  std::vector<double> err(n);
  for (std::size_t t = 0; t < rounds; ++t) {
    auto tree = fit_regression_tree(X, y, w, weak_params, derive_seed(seed, t));
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = std::abs(tree.predict(X.row(i)) - y[i]);
      max_err = std::max(max_err, err[i]);
    }
    if (!(max_err > fit_tolerance)) {
      // Perfect fit on every row.
      model.learners.push_back(std::move(tree));
      model.betas.push_back(kMinEpsilon);
      model.weight_history.push_back(w);
      model.stopped_early = t + 1 < rounds;
      break;
    }
    double target_w = 0.0, weighted_err = 0.0;
    for (std::size_t i = n_src; i < n; ++i) {
      err[i] /= max_err;
      target_w += w[i];
      weighted_err += w[i] * err[i];
    }
    for (std::size_t i = 0; i < n_src; ++i) err[i] /= max_err;
    const double eps = weighted_err / target_w;
    if (eps >= 0.5) {
      if (model.learners.empty()) {
        // Keep one learner so the model can predict at all.
        model.learners.push_back(std::move(tree));
        model.betas.push_back(std::min(eps / std::max(1.0 - eps, kMinEpsilon), 1e300));
        model.weight_history.push_back(w);
      }
      model.stopped_early = true;
      break;
    }
    const double beta = std::max(eps, kMinEpsilon) / (1.0 - std::max(eps, kMinEpsilon));
    model.learners.push_back(std::move(tree));
    model.betas.push_back(beta);

    for (std::size_t i = 0; i < n_src; ++i) w[i] *= std::pow(beta_src, err[i]);
    for (std::size_t i = n_src; i < n; ++i) w[i] *= std::pow(beta, -err[i]);
    for (auto& wi : w) wi = std::max(wi, kMinWeight);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& wi : w) wi /= total;
    model.weight_history.push_back(w);
  }
  return model;
}

// ---------------------------------------------------------------------------

double GaussianProcessModel::kernel(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return params_.signal_variance *
         std::exp(-d2 / (2.0 * params_.length_scale * params_.length_scale));
}

bool GaussianProcessModel::factorize(double jitter) {
  const auto n = static_cast<Eigen::Index>(X_.rows);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel(X_.row(i), X_.row(j));
      K(i, j) = k;
      K(j, i) = k;
    }
    K(i, i) += params_.noise_variance + jitter;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return false;
  Eigen::MatrixXd L = llt.matrixL();
  if (!L.diagonal().allFinite() || (L.diagonal().array() <= 0.0).any()) return false;

  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i) centered(i) = y_[i] - prior_mean_;
  chol_ = std::move(L);
  alpha_ = llt.solve(centered);
  jitter_ = jitter;
  return alpha_.allFinite();
}

GaussianProcessModel GaussianProcessModel::fit(Matrix X, std::vector<double> y,
                                               const KernelParams& params) {
  if (X.rows == 0 || X.rows != y.size()) fail("GP needs at least one row and matching targets");
  if (!(params.length_scale > 0.0) || !(params.signal_variance > 0.0) ||
      !(params.noise_variance >= 0.0))
    fail("GP kernel parameters must be positive (noise non-negative)");
  GaussianProcessModel gp;
  gp.X_ = std::move(X);
  gp.y_ = std::move(y);
  gp.params_ = params;
  gp.prior_mean_ = std::accumulate(gp.y_.begin(), gp.y_.end(), 0.0) / static_cast<double>(gp.y_.size());
  if (gp.factorize(0.0)) return gp;
  for (double jitter = 1e-10; jitter <= kMaxJitter * (1.0 + 1e-9); jitter *= 10.0)
    if (gp.factorize(jitter)) return gp;
  fail("ill-conditioned kernel");
}

GaussianProcessModel GaussianProcessModel::restore(Matrix X, std::vector<double> y,
                                                   const KernelParams& params, double jitter) {
  GaussianProcessModel gp;
  gp.X_ = std::move(X);
  gp.y_ = std::move(y);
  gp.params_ = params;
  gp.prior_mean_ = std::accumulate(gp.y_.begin(), gp.y_.end(), 0.0) / static_cast<double>(gp.y_.size());
  if (!gp.factorize(jitter)) fail("ill-conditioned kernel");
  return gp;
}

GpPosterior GaussianProcessModel::posterior(std::span<const double> x) const {
  if (x.size() != X_.cols)
    fail("GP query has dimension " + std::to_string(x.size()) + ", expected " +
         std::to_string(X_.cols));
  const auto n = static_cast<Eigen::Index>(X_.rows);
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(x, X_.row(i));
  const double mean = prior_mean_ + ks.dot(alpha_);
  Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  const double variance = std::max(0.0, params_.signal_variance - v.squaredNorm());
  return {mean, variance};
}

GaussianProcessModel fit_gp(std::span<const AugmentedRow> rows, const KernelParams& params) {
  if (rows.empty()) fail("GP needs at least one row");
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = rows[i].label;
  return GaussianProcessModel::fit(rows_to_matrix(rows), std::move(y), params);
}

GpPosterior gp_posterior(const GaussianProcessModel& gp, std::span<const double> x) {
  return gp.posterior(x);
}

// ---------------------------------------------------------------------------

std::string_view to_string(TransferLearnerKind kind) {
  return kind == TransferLearnerKind::TrAdaBoost ? "tradaboost" : "gp";
}

TransferLearnerKind parse_transfer_learner(std::string_view text) {
  if (text == "tradaboost") return TransferLearnerKind::TrAdaBoost;
  if (text == "gp") return TransferLearnerKind::GaussianProcess;
  fail("unknown transfer learner '" + std::string(text) + "'");
}

double TransferModel::learner_output(std::span<const double> augmented) const {
  return offset + std::visit([&](const auto& m) { return m.predict(augmented); }, learner);
}

namespace {

using Learner = std::variant<TrAdaBoostModel, GaussianProcessModel>;

struct Prepared {
  std::vector<AugmentedRow> rows;  // labels in log-ratio space
  std::vector<double> actual;      // raw responses
};

Prepared prepare(const BaseModel& base, std::span<const Sample> samples) {
  Prepared p;
  p.rows = augment(base, samples);
  for (auto& r : p.rows) {
    p.actual.push_back(r.label);
    r.label = to_log_ratio(r.label, r.x.back());
  }
  return p;
}

struct Fitted {
  Learner learner;
  double offset = 0.0;
};

// Shot labels are centered on their mean log-ratio so both learners model
// only the configuration-dependent correction; source labels stay as they are.
Fitted train_learner(TransferLearnerKind kind, std::span<const AugmentedRow> source,
                     std::span<const AugmentedRow> shots, const TransferOptions& opt,
                     const TreeParams& weak, std::uint64_t seed) {
  Fitted f;
  for (const auto& r : shots) f.offset += r.label;
  f.offset /= static_cast<double>(shots.size());
  std::vector<AugmentedRow> centered(shots.begin(), shots.end());
  for (auto& r : centered) r.label -= f.offset;
  if (kind == TransferLearnerKind::TrAdaBoost)
    f.learner = fit_tradaboost(source, centered, opt.tradaboost.rounds, weak, seed);
  else
    f.learner = fit_gp(centered, opt.gp);
  return f;
}

double predict_response(const Fitted& f, const AugmentedRow& row, Metric metric) {
  const double g = std::visit([&](const auto& m) { return m.predict(row.x); }, f.learner);
  return clamp_prediction(metric, from_log_ratio(f.offset + g, row.x.back()));
}

}  // namespace

TransferModel transfer(std::shared_ptr<const BaseModel> base, const FewShotSet& shots,
                       const Dataset& source_doe, const TransferOptions& options) {
  if (!base) fail("transfer needs a base model");
  if (options.max_iterations < 1) fail("max_iterations must be ≥ 1");
  if (shots.samples.empty()) fail("few-shot set is empty");
  if (options.selection == SelectionMode::Holdout &&
      (options.holdout == nullptr || options.holdout->samples.empty()))
    fail("holdout selection requires a non-empty labeled validation set");

  const Metric metric = base->metric;
  const Prepared shot = prepare(*base, shots.samples);
  const Prepared source = prepare(*base, source_doe.samples);
  Prepared holdout;
  if (options.selection == SelectionMode::Holdout) holdout = prepare(*base, options.holdout->samples);

  TreeParams weak = options.tradaboost.weak;
  const std::size_t dim = shot.rows.front().x.size();
  if (options.tradaboost.feature_fraction < 1.0) {
    auto m = static_cast<std::size_t>(
        std::ceil(options.tradaboost.feature_fraction * static_cast<double>(dim)));
    m = std::clamp<std::size_t>(m, 1, dim);
    if (m < dim) weak.max_features = m;
  }

  TransferModel result;
  result.base = base;
  result.few_shot_size = shots.samples.size();
  result.selection = options.selection;
  const bool training_error = options.selection == SelectionMode::LoocvOnShots && shot.rows.size() < 2;
  if (training_error)
    result.warnings.push_back("single shot: selection scored on training error instead of LOOCV");

  auto score = [&](TransferLearnerKind kind, std::uint64_t seed) {
    std::vector<double> predicted, actual;
    if (options.selection == SelectionMode::Holdout || training_error) {
      auto learner = train_learner(kind, source.rows, shot.rows, options, weak, seed);
      const Prepared& eval = training_error ? shot : holdout;
      for (std::size_t i = 0; i < eval.rows.size(); ++i) {
        predicted.push_back(predict_response(learner, eval.rows[i], metric));
        actual.push_back(eval.actual[i]);
      }
    } else {
      std::vector<AugmentedRow> rest;
      for (std::size_t leave = 0; leave < shot.rows.size(); ++leave) {
        rest.clear();
        for (std::size_t i = 0; i < shot.rows.size(); ++i)
          if (i != leave) rest.push_back(shot.rows[i]);
        auto learner = train_learner(kind, source.rows, rest, options, weak, seed);
        predicted.push_back(predict_response(learner, shot.rows[leave], metric));
        actual.push_back(shot.actual[leave]);
      }
    }
    return mre(predicted, actual);
  };

  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_seed = 0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const auto seed = derive_seed(options.seed, it);
    for (auto kind : {TransferLearnerKind::TrAdaBoost, TransferLearnerKind::GaussianProcess}) {
      const double s = score(kind, seed);
      result.selection_report.push_back({it, kind, s});
      if (s < best) {
        best = s;
        best_seed = seed;
        result.chosen = kind;
        result.chosen_iteration = it;
      }
    }
  }
  auto fitted = train_learner(result.chosen, source.rows, shot.rows, options, weak, best_seed);
  result.learner = std::move(fitted.learner);
  result.offset = fitted.offset;
  return result;
}

double predict_target(const TransferModel& model, const ApplicationProfile& profile,
                      const Configuration& config) {
  auto x = model.base->model_input(profile, config);
  const double fs = clamp_prediction(model.base->metric, model.base->raw_predict(x));
  x.push_back(fs);
  return clamp_prediction(model.base->metric, from_log_ratio(model.learner_output(x), fs));
}

}  // namespace leaper
