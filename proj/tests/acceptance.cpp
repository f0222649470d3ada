// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "leaper/base_model.hpp"
#include "leaper/doe.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/rng.hpp"
#include "leaper/store.hpp"
#include "leaper/synth.hpp"
#include "leaper/transfer.hpp"
#include "support.hpp"

using namespace leaper;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::string kSpacePath = std::string(LEAPER_DATA_DIR) + "/space_full.json";
const std::string kParamsPath = std::string(LEAPER_DATA_DIR) + "/params_source.json";

const ConfigurationSpace& shipped_space() {
  static const auto space = ConfigurationSpace::load(kSpacePath);
  return space;
}

std::vector<double> column(const Dataset& d, Metric m = Metric::ExecTimeMs) {
  std::vector<double> out;
  for (const auto& s : d.samples) out.push_back(*s.response(m));
  return out;
}

// ---------------------------------------------------------------------------

Outcome mre_exactness() {
  const double a = mre(std::vector<PredictionPair>{{3.0, 2.0}});
  const double b = mre(std::vector<PredictionPair>{{2.0, 1.0}, {4.0, 8.0}});
  const double c = mre(std::vector{1.5, 7.0, 2.0}, std::vector{1.5, 7.0, 2.0});
  // Hand evaluation: |3-2|/2, (|2-1|/1 + |4-8|/8)/2, 0.
  const bool ok = std::abs(a - 0.5) <= 1e-12 && std::abs(b - 0.75) <= 1e-12 && std::abs(c) <= 1e-12 &&
                  accuracy_from_mre(0.15) == 85.0;
  return {ok, fmt("mre=%.17g,%.17g,%.17g accuracy(0.15)=%.17g", a, b, c, accuracy_from_mre(0.15))};
}

Outcome split_oracle() {
  int agree = 0;
  const int n = 200;
  for (int inst = 0; inst < n; ++inst) {
    Rng rng(derive_seed(42, inst));
    const std::size_t rows = 2 + rng.below(31), cols = 1 + rng.below(5);
    Matrix X(rows, cols);
    std::vector<double> y(rows), w(rows);
    // Coarse integer grids make threshold ties common.
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) X(i, j) = static_cast<double>(rng.below(6));
      y[i] = X(i, 0) * rng.uniform(-2, 2) + rng.normal();
      w[i] = rng.uniform(0.1, 2.0);
    }
    const auto oracle = brute_force_best_split(X, y, w);
    const auto tree = fit_regression_tree(X, y, w, {1, 1, std::nullopt}, inst);
    const auto& root = tree.nodes[0];
    bool same;
    if (!oracle.found) {
      same = root.is_leaf();
    } else {
      same = !root.is_leaf() && static_cast<std::size_t>(root.feature) == oracle.feature &&
             root.threshold == oracle.threshold &&
             std::abs(tree.nodes[root.left].sse + tree.nodes[root.right].sse - oracle.sse) <= 1e-12;
    }
    agree += same;
  }
  return {agree == n, fmt("%d/%d instances agree", agree, n)};
}

Outcome boosting_monotone() {
  int ok = 0;
  const double rates[] = {0.05, 0.1, 0.3, 0.7, 1.0};
  for (int ds = 0; ds < 20; ++ds) {
    const auto& space = shipped_space();
    const auto params = random_surface(space, 300 + ds);
    const auto plan = lhs_sample(space, 60, 300 + ds);
    const auto data = gen_environment(space, gen_profile(ds, 5), params, plan.configurations);
    std::vector<std::vector<double>> rows;
    for (const auto& s : data.samples) rows.push_back(assemble_features(s.profile, s.configuration, space));
    const auto X = Matrix::from_rows(rows);
    const auto y = column(data);
    const double lr = rates[ds % 5];
    const std::size_t stages = 60;
    const auto m = fit_gradient_boosting(X, y, {3, 1, std::nullopt}, stages, lr, ds);
    double prev = INFINITY;
    bool mono = true;
    for (std::size_t t = 0; t <= stages; ++t) {
      double sse = 0.0;
      for (std::size_t i = 0; i < X.rows; ++i) {
        const double r = m.predict_partial(X.row(i), t) - y[i];
        sse += r * r;
      }
      const double mse = sse / static_cast<double>(X.rows);
      if (mse > prev) mono = false;
      prev = mse;
    }
    ok += mono;
  }
  return {ok == 20, fmt("%d/20 datasets non-increasing", ok)};
}

Outcome gp_interpolation() {
  int ok = 0;
  double worst_mean = 0.0, worst_var = 0.0;
  for (int set = 0; set < 10; ++set) {
    Rng rng(derive_seed(77, set));
    Matrix X(20, 3);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 3; ++j) X(i, j) = rng.uniform(0, 4);
      y[i] = std::sin(X(i, 0)) + 0.5 * X(i, 1) - 0.2 * X(i, 2) * X(i, 2) + 0.1 * rng.normal();
    }
    const auto gp = GaussianProcessModel::fit(X, y, {1.0, 1.0, 1e-10});
    bool good = true;
    for (std::size_t i = 0; i < 20; ++i) {
      const auto post = gp.posterior(X.row(i));
      worst_mean = std::max(worst_mean, std::abs(post.mean - y[i]));
      worst_var = std::max(worst_var, post.variance);
      if (std::abs(post.mean - y[i]) > 1e-6 || post.variance > 1e-6) good = false;
    }
    ok += good;
  }
  return {ok == 10, fmt("%d/10 sets, max |mean-y|=%.2e, max var=%.2e", ok, worst_mean, worst_var)};
}

Outcome lhs_stratification() {
  const auto& space = shipped_space();
  bool strat = true, unique = true, stable = true;
  for (std::uint64_t seed : {0u, 1u, 7u, 12345u}) {
    const auto plan = lhs_sample(space, 50, seed);
    // Level counts from the raw configurations, not the library's report.
    for (std::size_t o = 0; o < space.size(); ++o) {
      std::vector<std::size_t> counts(space.options()[o].level_count(), 0);
      for (const auto& c : plan.configurations) ++counts[c.levels[o]];
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      if (*hi - *lo > 1) strat = false;
    }
    std::set<std::vector<std::uint32_t>> seen;
    for (const auto& c : plan.configurations) seen.insert(c.levels);
    if (seen.size() != 50 || plan.configurations.size() != 50) unique = false;
    if (plan.to_json().dump() != lhs_sample(space, 50, seed).to_json().dump()) stable = false;
  }
  return {strat && unique && stable,
          fmt("stratified=%d duplicate-free=%d byte-identical=%d", strat, unique, stable)};
}

Outcome jsd_identities() {
  Rng rng(5);
  std::vector<double> v(40);
  for (auto& x : v) x = std::exp(rng.normal());
  const double self = jsd(v, v, HistogramSpec::covering(v, v));
  const double disjoint = jsd(std::vector{0.1, 0.2, 0.3}, std::vector{0.7, 0.9}, HistogramSpec{2, 0.0, 1.0});
  bool ok = self == 0.0 && disjoint == 1.0;
  int symmetric = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const std::size_t bins = 2 + rng.below(40);
    std::vector<double> p(bins), q(bins);
    double sp = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      p[b] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      q[b] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      sp += p[b];
      sq += q[b];
    }
    p[0] += 0.01, q[bins - 1] += 0.01, sp += 0.01, sq += 0.01;
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    symmetric += jsd_masses(p, q) == jsd_masses(q, p);
  }
  const double hand = 0.5 * std::log2(4.0 / 3.0) + 0.5 * (0.5 * std::log2(2.0 / 3.0) + 0.5 * 1.0);
  const double got = jsd_masses(std::vector{1.0, 0.0}, std::vector{0.5, 0.5});
  ok = ok && symmetric == 100 && std::abs(got - 0.3113) <= 1e-4 && std::abs(got - hand) <= 1e-12;
  return {ok, fmt("self=%g disjoint=%.17g symmetric=%d/100 hand=%.6f", self, disjoint, symmetric, got)};
}

// One synthetic source/target pair with a trained base model.
struct Pair {
  ApplicationProfile profile;
  SurfaceParams source;
  Dataset source_doe;
  std::shared_ptr<const BaseModel> base;
  Dataset full_source;
};

constexpr std::size_t kSourceDoe = 200;

Pair make_pair(std::uint64_t seed) {
  const auto& space = shipped_space();
  Pair p;
  p.profile = gen_profile(derive_seed(seed, 1), 5);
  p.source = random_surface(space, derive_seed(seed, 2));
  const auto plan = lhs_sample(space, kSourceDoe, derive_seed(seed, 4));
  p.source_doe = gen_environment(space, p.profile, p.source, plan.configurations, "source");
  TrainOptions opt;
  opt.seed = derive_seed(seed, 5);
  p.base = std::make_shared<const BaseModel>(train_base_model(p.source_doe, opt));
  p.full_source = gen_environment(space, p.profile, p.source, std::nullopt, "source");
  return p;
}

Dataset shots_for(const Pair& p, const SurfaceParams& target, std::size_t k, std::uint64_t seed) {
  const auto plan = lhs_sample(shipped_space(), k, derive_seed(seed, 6));
  return gen_environment(shipped_space(), p.profile, target, plan.configurations, "target");
}

double full_space_accuracy(const Dataset& full_target, auto&& predict) {
  std::vector<double> pred;
  for (const auto& s : full_target.samples) pred.push_back(predict(s));
  return accuracy_from_mre(mre(pred, column(full_target)));
}

double transfer_accuracy(const Pair& p, const Dataset& shots, const Dataset& full_target, std::uint64_t seed) {
  TransferOptions opt;
  opt.seed = derive_seed(seed, 7);
  const auto tm = transfer(p.base, {"target", shots.samples}, p.source_doe, opt);
  return full_space_accuracy(full_target,
                             [&](const Sample& s) { return predict_target(tm, s.profile, s.configuration); });
}

Outcome transfer_beats_scratch() {
  int wins = 0;
  double total = 0.0;
  for (int run = 0; run < 20; ++run) {
    const std::uint64_t seed = 1000 + run;
    const auto p = make_pair(seed);
    const auto target = derive_related_env(p.source, shipped_space(), {0.9, 1.0, derive_seed(seed, 3)});
    const auto full_target = gen_environment(shipped_space(), p.profile, target, std::nullopt, "target");
    const auto shots = shots_for(p, target, 5, seed);
    const double at = transfer_accuracy(p, shots, full_target, seed);
    TrainOptions so;
    so.seed = derive_seed(seed, 8);
    so.folds = 5;
    const auto scratch = train_base_model(shots, so);
    const double as = full_space_accuracy(
        full_target, [&](const Sample& s) { return predict_base(scratch, s.profile, s.configuration); });
    wins += at > as;
    total += at;
  }
  const double mean = total / 20.0;
  return {wins >= 16 && mean >= 80.0, fmt("transfer beats scratch in %d/20, mean 5-shot accuracy %.2f%%", wins, mean)};
}

Outcome shot_saturation() {
  const std::size_t counts[] = {2, 5, 10, 25};
  std::vector<double> mean(4, 0.0);
  for (int run = 0; run < 10; ++run) {
    const std::uint64_t seed = 2000 + run;
    const auto p = make_pair(seed);
    const auto target = derive_related_env(p.source, shipped_space(), {0.9, 1.0, derive_seed(seed, 3)});
    const auto full_target = gen_environment(shipped_space(), p.profile, target, std::nullopt, "target");
    for (std::size_t k = 0; k < 4; ++k)
      mean[k] += transfer_accuracy(p, shots_for(p, target, counts[k], seed), full_target, seed) / 10.0;
  }
  bool ok = true;
  for (std::size_t k = 1; k < 4; ++k) ok = ok && mean[k] >= mean[k - 1] - 2.0;
  return {ok, fmt("mean accuracy at 2/5/10/25 shots: %.2f %.2f %.2f %.2f", mean[0], mean[1], mean[2], mean[3])};
}

Outcome relatedness_anticorrelation() {
  const double rhos[] = {0.95, 0.9, 0.8, 0.7, 0.6, 0.5};
  std::vector<double> divergence, acc;
  for (int run = 0; run < 10; ++run) {
    const std::uint64_t seed = 2000 + run;
    const auto p = make_pair(seed);
    for (double rho : rhos) {
      const auto target = derive_related_env(p.source, shipped_space(), {rho, 1.0, derive_seed(seed, 3)});
      const auto full_target = gen_environment(shipped_space(), p.profile, target, std::nullopt, "target");
      acc.push_back(transfer_accuracy(p, shots_for(p, target, 5, seed), full_target, seed));
      divergence.push_back(relatedness_report(p.full_source, full_target, Metric::ExecTimeMs).jsd);
    }
  }
  const double r = pearson(divergence, acc);
  return {r < 0.0, fmt("Pearson(JSD, accuracy) = %.3f over %zu targets", r, acc.size())};
}

Outcome round_trip() {
  const auto& space = shipped_space();
  const std::uint64_t seed = 3000;
  const auto profile = gen_profile(3, 5);
  const auto source = random_surface(space, seed);
  const auto doe = gen_environment(space, profile, source, lhs_sample(space, 60, seed).configurations, "source");
  TrainOptions opt;
  opt.seed = seed;
  opt.folds = 3;
  const auto base = std::make_shared<const BaseModel>(train_base_model(doe, opt));
  const auto target = derive_related_env(source, space, {0.8, 1.0, seed});
  const auto shots = gen_environment(space, profile, target, lhs_sample(space, 6, seed + 1).configurations, "target");
  TransferOptions topt;
  topt.max_iterations = 2;
  const auto fitted = transfer(base, {"target", shots.samples}, doe, topt);

  // Both learner kinds around the same base and offset.
  auto shot_rows = augment(*base, shots.samples);
  for (auto& r : shot_rows) r.label = to_log_ratio(r.label, r.x.back()) - fitted.offset;
  auto source_rows = augment(*base, doe.samples);
  for (auto& r : source_rows) r.label = to_log_ratio(r.label, r.x.back()) - fitted.offset;
  auto with_tb = fitted, with_gp = fitted;
  with_tb.chosen = TransferLearnerKind::TrAdaBoost;
  with_tb.learner = fit_tradaboost(source_rows, shot_rows, 10, TrAdaBoostParams{}.weak, seed);
  with_gp.chosen = TransferLearnerKind::GaussianProcess;
  with_gp.learner = fit_gp(shot_rows, topt.gp);

  test::TempDir dir("acceptance_rt");
  const std::vector<AnyModel> models{*base, with_tb, with_gp};
  const char* names[] = {"base", "tradaboost", "gp"};
  std::string detail;
  bool ok = true;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto path = dir.file(std::string(names[m]) + ".json");
    save_model(models[m], path);
    const auto loaded = load_model(path);
    Rng rng(derive_seed(seed, m));
    int equal = 0;
    for (int q = 0; q < 100; ++q) {
      const auto c = space.configuration_at(rng.below(space.cardinality()));
      equal += predict_any(loaded, profile, c) == predict_any(models[m], profile, c);
    }
    ok = ok && equal == 100;
    detail += fmt("%s %d/100 ", names[m], equal);
  }
  return {ok, detail + "exact"};
}

int run_cli(const test::TempDir& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.path().string() + "' && '" + LEAPER_CLI_PATH + "' " + args +
                          " > /dev/null 2>> cli.log";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const std::string s = " --space " + kSpacePath;
  const std::vector<std::string> steps{
      "doe" + s + " --n 50 --seed 11 --out doe.json",
      "synth" + s + " --params " + kParamsPath + " --plan doe.json --env-id source --out doe.csv",
      "train-base --data doe.csv" + s + " --target exec_ms --folds 5 --k-features 100 --seed 11 --out base.json",
      "doe" + s + " --n 5 --seed 12 --out shots.json",
      "synth" + s + " --params " + kParamsPath +
          " --relatedness 0.9 --rel-seed 13 --plan shots.json --env-id target --out shots.csv",
      "doe" + s + " --n 100 --seed 14 --out test.json",
      "synth" + s + " --params " + kParamsPath +
          " --relatedness 0.9 --rel-seed 13 --plan test.json --env-id target --out test.csv",
      "transfer --base base.json --shots shots.csv --source-doe doe.csv --iterations 5 --seed 11 --out target.json",
      "predict --model target.json --data test.csv --out preds.csv",
      "evaluate --model target.json --data test.csv --out report.json",
      "relatedness --a doe.csv --b shots.csv" + s + " --out relatedness.json",
  };
  const char* outputs[] = {"doe.json", "doe.csv", "base.json", "shots.csv", "test.csv",
                           "target.json", "preds.csv", "report.json", "relatedness.json"};
  test::TempDir a("acceptance_cli_a"), b("acceptance_cli_b");
  for (const auto* dir : {&a, &b})
    for (const auto& step : steps)
      if (const int code = run_cli(*dir, step); code != 0)
        return {false, fmt("'%s' exited %d: %s", step.c_str(), code, test::slurp(dir->file("cli.log")).c_str())};
  int same = 0;
  for (const char* f : outputs) same += test::slurp(a.file(f)) == test::slurp(b.file(f)) && !test::slurp(a.file(f)).empty();
  return {same == 9, fmt("%d/9 artifacts byte-identical across two runs", same)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"mre and accuracy exactness", mre_exactness},
      {"split oracle equivalence", split_oracle},
      {"boosting training MSE monotone", boosting_monotone},
      {"GP interpolation", gp_interpolation},
      {"LHS stratification", lhs_stratification},
      {"JSD identities", jsd_identities},
      {"few-shot transfer beats scratch", transfer_beats_scratch},
      {"shot-count saturation", shot_saturation},
      {"relatedness anti-correlation", relatedness_anticorrelation},
      {"model round-trip fidelity", round_trip},
      {"CLI end-to-end determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s C%zu %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
