#include "leaper/base_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leaper/error.hpp"
#include "leaper/parallel.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/rng.hpp"

namespace leaper {

namespace {

// Seed streams derived from the training seed.
constexpr std::uint64_t kSelectionStream = 1;
constexpr std::uint64_t kFoldStream = 2;
constexpr std::uint64_t kForestStream = 10;
constexpr std::uint64_t kBoostingStream = 11;
constexpr std::uint64_t kCvStream = 100;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

Normalizer Normalizer::fit(const Matrix& X) {
  if (X.rows == 0) fail("cannot fit a normalizer on an empty matrix");
  Normalizer n;
  n.min.assign(X.cols, 0.0);
  n.max.assign(X.cols, 0.0);
  for (std::size_t j = 0; j < X.cols; ++j) {
    double lo = X(0, j), hi = X(0, j);
    for (std::size_t i = 0; i < X.rows; ++i) {
      if (!std::isfinite(X(i, j)))
        fail("non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      lo = std::min(lo, X(i, j));
      hi = std::max(hi, X(i, j));
    }
    n.min[j] = lo;
    n.max[j] = hi;
  }
  return n;
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  if (x.size() != min.size())
    fail("normalizer expects dimension " + std::to_string(min.size()) + ", got " +
         std::to_string(x.size()));
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double range = max[j] - min[j];
    out[j] = range > 0.0 ? std::clamp((x[j] - min[j]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Matrix Normalizer::apply(const Matrix& X) const {
  Matrix out(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto row = apply(X.row(i));
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> FeatureSelection::apply(std::span<const double> x) const {
  std::vector<double> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.size()) fail("feature selection index out of range");
    out[k] = x[indices[k]];
  }
  return out;
}

Matrix FeatureSelection::apply(const Matrix& X) const {
  Matrix out(X.rows, indices.size());
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto row = apply(X.row(i));
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

FeatureSelection select_features(const Matrix& X, std::span<const double> y, std::size_t k,
                                 std::uint64_t seed) {
  if (k < 1) fail("k must be ≥ 1");
  check_training_input(X, y, {});
  const std::size_t d = X.cols;
  FeatureSelection sel;
  sel.k = k;
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (d <= k) {
    sel.indices.resize(d);
    std::iota(sel.indices.begin(), sel.indices.end(), std::size_t{0});
    sel.no_signal = constant;
    return sel;
  }

  FeatureImportance importance;
  if (!constant) {
    TreeParams probe;
    probe.max_features = ceil_div(d, 3);
    importance = feature_importance(fit_random_forest(X, y, probe, 100, true, seed), d);
  }
  if (constant || importance.no_splits) {
    sel.no_signal = true;
    sel.indices.resize(k);
    std::iota(sel.indices.begin(), sel.indices.end(), std::size_t{0});
    return sel;
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance.scores[a] > importance.scores[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  sel.indices = std::move(order);
  return sel;
}

TreeParams ForestCandidate::tree_params(std::size_t dim) const {
  TreeParams p;
  p.min_samples_leaf = min_samples_leaf;
  p.max_depth = max_depth;
  std::size_t m = dim;
  switch (rule) {
    case FeatureRule::Third: m = ceil_div(dim, 3); break;
    case FeatureRule::Sqrt: m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim)))); break;
    case FeatureRule::All: m = dim; break;
    case FeatureRule::Fixed: m = fixed_features; break;
  }
  m = std::clamp<std::size_t>(m, 1, std::max<std::size_t>(dim, 1));
  if (m < dim) p.max_features = m;
  return p;
}

TreeParams BoostingCandidate::tree_params() const {
  TreeParams p;
  p.max_depth = max_depth;
  p.min_samples_leaf = min_samples_leaf;
  return p;
}

HyperGrid HyperGrid::default_grid() {
  HyperGrid g;
  for (std::size_t trees : {100, 300})
    for (FeatureRule rule : {FeatureRule::Third, FeatureRule::Sqrt}) {
      ForestCandidate c;
      c.n_trees = trees;
      c.rule = rule;
      g.forests.push_back(c);
    }
  for (std::size_t stages : {100, 300})
    for (double lr : {0.05, 0.1})
      for (std::size_t depth : {2, 3}) {
        BoostingCandidate c;
        c.n_stages = stages;
        c.learning_rate = lr;
        c.max_depth = depth;
        g.boosting.push_back(c);
      }
  return g;
}

HyperGrid HyperGrid::single(ForestCandidate forest, BoostingCandidate boosting) {
  return HyperGrid{{forest}, {boosting}};
}

std::vector<double> assemble_features(const ApplicationProfile& profile,
                                      const Configuration& config,
                                      const ConfigurationSpace& space) {
  if (profile.names.size() != profile.values.size()) fail("profile names and values differ in length");
  std::vector<double> out(profile.values.size() + space.encoded_width());
  std::copy(profile.values.begin(), profile.values.end(), out.begin());
  space.encode_into(config, std::span<double>(out).subspan(profile.values.size()));
  return out;
}

std::vector<double> assemble_features(const ApplicationProfile& profile,
                                      const Configuration& config,
                                      const ConfigurationSpace& space,
                                      std::span<const std::string> schema) {
  if (!std::equal(profile.names.begin(), profile.names.end(), schema.begin(), schema.end()))
    fail("profile schema does not match the model's training schema");
  return assemble_features(profile, config, space);
}

std::vector<double> BaseModel::model_input(const ApplicationProfile& profile,
                                           const Configuration& config) const {
  auto raw = assemble_features(profile, config, space, profile_names);
  return selection.apply(normalizer.apply(raw));
}

double BaseModel::raw_predict(std::span<const double> input) const {
  return (forest.predict(input) + gbm.predict(input)) / 2.0;
}

double predict_base(const BaseModel& model, const ApplicationProfile& profile,
                    const Configuration& config) {
  return clamp_prediction(model.metric, model.raw_predict(model.model_input(profile, config)));
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 1 || folds > n) fail("fold count must lie in [1, n]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold_of(n);
  // Contiguous chunks whose sizes differ by at most one.
  for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos * folds / n;
  return fold_of;
}

BaseModel train_base_model(const Dataset& dataset, const TrainOptions& options) {
  const auto& opt = options;
  if (opt.folds < 2) fail("folds must be ≥ 2");
  if (opt.grid.forests.empty() || opt.grid.boosting.empty())
    fail("hyperparameter grid must contain at least one forest and one boosting candidate");
  if (dataset.samples.empty()) fail("training dataset is empty");

  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    if (!dataset.samples[i].response(opt.metric)) missing.push_back(i);
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      list += (i ? "," : "") + std::to_string(missing[i]);
    if (missing.size() > 20) list += ",...";
    fail("metric " + std::string(metric_name(opt.metric)) + " absent from samples [" + list + "]");
  }
  if (auto violations = validate_dataset(dataset); !violations.empty()) {
    const auto& v = violations.front();
    fail("invalid dataset at sample " + std::to_string(v.sample) + " (" + v.field + "): " +
         v.message);
  }
  const std::size_t n = dataset.samples.size();
  if (opt.folds > n)
    fail("folds (" + std::to_string(opt.folds) + ") exceed sample count (" + std::to_string(n) + ")");

  BaseModel model;
  model.env_id = dataset.env_id;
  model.metric = opt.metric;
  model.space = dataset.space;
  model.profile_names = dataset.samples.front().profile.names;

  std::vector<std::vector<double>> raw_rows;
  std::vector<double> y(n);
  raw_rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = dataset.samples[i];
    raw_rows.push_back(assemble_features(s.profile, s.configuration, dataset.space));
    y[i] = *s.response(opt.metric);
  }
  const Matrix raw = Matrix::from_rows(raw_rows);
  model.normalizer = Normalizer::fit(raw);
  const Matrix normalized = model.normalizer.apply(raw);
  model.selection = select_features(normalized, y, opt.k_features,
                                    derive_seed(opt.seed, kSelectionStream));
  const Matrix X = model.selection.apply(normalized);
  const std::size_t dim = X.cols;

  const auto fold_of = assign_folds(n, opt.folds, derive_seed(opt.seed, kFoldStream));
  struct FoldData {
    Matrix train_x, test_x;
    std::vector<double> train_y, test_y;
  };
  std::vector<FoldData> fold_data(opt.folds);
  for (std::size_t f = 0; f < opt.folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test_idx : train_idx).push_back(i);
    auto& fd = fold_data[f];
    fd.train_x = X.select_rows(train_idx);
    fd.test_x = X.select_rows(test_idx);
    for (auto i : train_idx) fd.train_y.push_back(y[i]);
    for (auto i : test_idx) fd.test_y.push_back(y[i]);
  }

  const std::size_t n_forest = opt.grid.forests.size();
  const std::size_t n_boost = opt.grid.boosting.size();
  const std::size_t n_candidates = n_forest + n_boost;
  std::vector<double> fold_mre(n_candidates * opt.folds, 0.0);
  parallel_for(n_candidates * opt.folds, [&](std::size_t task) {
    const std::size_t cand = task / opt.folds, f = task % opt.folds;
    const auto& fd = fold_data[f];
    // Seeded by learner family and fold only, so identical candidates score identically
    // and every candidate sees the same random streams.
    const auto seed = derive_seed(derive_seed(opt.seed, kCvStream + (cand < n_forest ? 0 : 1)), f);
    std::vector<double> pred(fd.test_y.size());
    if (cand < n_forest) {
      const auto& c = opt.grid.forests[cand];
      auto rf = fit_random_forest(fd.train_x, fd.train_y, c.tree_params(dim), c.n_trees,
                                  c.bootstrap, seed);
      for (std::size_t i = 0; i < pred.size(); ++i)
        pred[i] = clamp_prediction(opt.metric, rf.predict(fd.test_x.row(i)));
    } else {
      const auto& c = opt.grid.boosting[cand - n_forest];
      auto gb = fit_gradient_boosting(fd.train_x, fd.train_y, c.tree_params(), c.n_stages,
                                      c.learning_rate, seed);
      for (std::size_t i = 0; i < pred.size(); ++i)
        pred[i] = clamp_prediction(opt.metric, gb.predict(fd.test_x.row(i)));
    }
    fold_mre[task] = mre(pred, fd.test_y);
  });

  auto mean_score = [&](std::size_t cand) {
    double s = 0.0;
    for (std::size_t f = 0; f < opt.folds; ++f) s += fold_mre[cand * opt.folds + f];
    return s / static_cast<double>(opt.folds);
  };
  auto& report = model.cv_report;
  report.folds = opt.folds;
  for (std::size_t c = 0; c < n_forest; ++c) {
    report.forest_scores.push_back({c, mean_score(c)});
    if (report.forest_scores[c].mean_mre < report.forest_scores[report.chosen_forest].mean_mre)
      report.chosen_forest = c;
  }
  for (std::size_t c = 0; c < n_boost; ++c) {
    report.boosting_scores.push_back({c, mean_score(n_forest + c)});
    if (report.boosting_scores[c].mean_mre <
        report.boosting_scores[report.chosen_boosting].mean_mre)
      report.chosen_boosting = c;
  }

  model.forest_params = opt.grid.forests[report.chosen_forest];
  model.boosting_params = opt.grid.boosting[report.chosen_boosting];
  model.forest = fit_random_forest(X, y, model.forest_params.tree_params(dim),
                                   model.forest_params.n_trees, model.forest_params.bootstrap,
                                   derive_seed(opt.seed, kForestStream));
  model.gbm = fit_gradient_boosting(X, y, model.boosting_params.tree_params(),
                                    model.boosting_params.n_stages,
                                    model.boosting_params.learning_rate,
                                    derive_seed(opt.seed, kBoostingStream));
  return model;
}

}  // namespace leaper
