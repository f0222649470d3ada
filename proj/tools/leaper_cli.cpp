// leaper command-line front end. Talks to the library only through leaper.h.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "leaper/leaper.h"

namespace {

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void raise(int code, std::string message) { throw Failure{code, std::move(message)}; }

void check(leaper_status s) {
  if (s == LEAPER_OK) return;
  raise(s == LEAPER_ERR_INTERNAL ? 2 : 1, leaper_last_error());
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Space = Handle<leaper_space, leaper_space_free>;
using Plan = Handle<leaper_plan, leaper_plan_free>;
using Env = Handle<leaper_env, leaper_env_free>;
using Dataset = Handle<leaper_dataset, leaper_dataset_free>;
using Model = Handle<leaper_model, leaper_model_free>;

struct Text {
  char* p = nullptr;
  ~Text() { leaper_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(1, "cannot write '" + path + "'");
  f << text;
  if (!f) raise(1, "write failed for '" + path + "'");
}

void log_lines(const std::string& text) {
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) std::cerr << "leaper: warning: " << text.substr(start, end - start) << "\n";
    start = end + 1;
  }
}

struct DoeArgs {
  std::string space, out;
  std::int64_t n = 50;
  std::uint64_t seed = 0;
};

struct SynthArgs {
  std::string space, params, out, plan, params_out, env_id = "synthetic";
  std::optional<double> relatedness;
  double gamma = 1.0;
  std::uint64_t rel_seed = 0;
};

struct TrainArgs {
  std::string data, space, target = "exec_ms", grid, out;
  std::size_t folds = 5, k_features = 100;
  std::uint64_t seed = 0;
};

struct TransferArgs {
  std::string base, shots, source_doe, holdout, out;
  std::size_t iterations = 5;
  std::uint64_t seed = 0;
};

struct PredictArgs {
  std::string model, data, out;
};

struct RelatednessArgs {
  std::string a, b, space, metric = "exec_ms", out;
  std::size_t bins = 32;
};

void run_doe(const DoeArgs& a) {
  Space space;
  check(leaper_space_load(a.space.c_str(), space.out()));
  Plan plan;
  check(leaper_doe_lhs(space.get(), a.n, a.seed, plan.out()));
  Text json;
  check(leaper_plan_to_json(plan.get(), json.out()));
  emit(json.str(), a.out);
}

void run_synth(const SynthArgs& a) {
  Space space;
  check(leaper_space_load(a.space.c_str(), space.out()));
  Env env;
  check(leaper_env_load(space.get(), a.params.c_str(), env.out()));
  if (a.relatedness) {
    Env related;
    check(leaper_env_related(space.get(), env.get(), *a.relatedness, a.gamma, a.rel_seed,
                             related.out()));
    std::swap(env.p, related.p);
  }
  Plan plan;
  if (!a.plan.empty()) check(leaper_plan_load(space.get(), a.plan.c_str(), plan.out()));
  Dataset data;
  check(leaper_env_generate(space.get(), env.get(), plan.get(), a.env_id.c_str(), data.out()));
  Text csv, sidecar;
  check(leaper_dataset_to_csv(data.get(), csv.out()));
  check(leaper_env_to_json(env.get(), sidecar.out()));
  std::string sidecar_path = a.params_out;
  if (sidecar_path.empty() && !a.out.empty()) sidecar_path = a.out + ".params.json";
  emit(csv.str(), a.out);
  if (!sidecar_path.empty()) emit(sidecar.str(), sidecar_path);
}

void run_train(const TrainArgs& a) {
  Space space;
  check(leaper_space_load(a.space.c_str(), space.out()));
  Dataset data;
  check(leaper_dataset_read(space.get(), a.data.c_str(), data.out()));
  leaper_train_options opts;
  leaper_train_options_init(&opts);
  opts.metric = a.target.c_str();
  opts.folds = a.folds;
  opts.k_features = a.k_features;
  opts.seed = a.seed;
  if (!a.grid.empty()) opts.grid_path = a.grid.c_str();
  Model model;
  check(leaper_train_base(data.get(), &opts, model.out()));
  Text json;
  check(leaper_model_to_json(model.get(), json.out()));
  emit(json.str(), a.out);
}

void run_transfer(const TransferArgs& a) {
  Model base;
  check(leaper_model_load(a.base.c_str(), base.out()));
  Space space;
  check(leaper_model_space(base.get(), space.out()));
  Dataset shots, doe, holdout;
  check(leaper_dataset_read(space.get(), a.shots.c_str(), shots.out()));
  check(leaper_dataset_read(space.get(), a.source_doe.c_str(), doe.out()));
  leaper_transfer_options opts;
  leaper_transfer_options_init(&opts);
  opts.iterations = a.iterations;
  opts.seed = a.seed;
  if (!a.holdout.empty()) {
    check(leaper_dataset_read(space.get(), a.holdout.c_str(), holdout.out()));
    opts.holdout = holdout.get();
  }
  Model model;
  check(leaper_transfer(base.get(), shots.get(), doe.get(), &opts, model.out()));
  Text warnings, json;
  check(leaper_model_warnings(model.get(), warnings.out()));
  log_lines(warnings.str());
  check(leaper_model_to_json(model.get(), json.out()));
  emit(json.str(), a.out);
}

void load_model_and_data(const PredictArgs& a, Model& model, Dataset& data) {
  check(leaper_model_load(a.model.c_str(), model.out()));
  Space space;
  check(leaper_model_space(model.get(), space.out()));
  check(leaper_dataset_read(space.get(), a.data.c_str(), data.out()));
}

void run_predict(const PredictArgs& a) {
  Model model;
  Dataset data;
  load_model_and_data(a, model, data);
  Text csv;
  check(leaper_predict_csv(model.get(), data.get(), csv.out()));
  emit(csv.str(), a.out);
}

void run_evaluate(const PredictArgs& a) {
  Model model;
  Dataset data;
  load_model_and_data(a, model, data);
  Text json;
  check(leaper_evaluate(model.get(), data.get(), json.out()));
  emit(json.str(), a.out);
}

void run_relatedness(const RelatednessArgs& a) {
  Space space;
  if (a.space.empty()) {
    const char* paths[] = {a.a.c_str(), a.b.c_str()};
    check(leaper_space_infer(paths, 2, space.out()));
  } else {
    check(leaper_space_load(a.space.c_str(), space.out()));
  }
  Dataset da, db;
  check(leaper_dataset_read(space.get(), a.a.c_str(), da.out()));
  check(leaper_dataset_read(space.get(), a.b.c_str(), db.out()));
  Text json, warnings;
  check(leaper_relatedness(da.get(), db.get(), a.metric.c_str(), a.bins, json.out(),
                           warnings.out()));
  log_lines(warnings.str());
  emit(json.str(), a.out);
}

void one_line(std::string& s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaper: few-shot transfer of FPGA performance and resource models"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker cap (default: LEAPER_THREADS, then all cores)");

  DoeArgs doe;
  auto* c_doe = app.add_subcommand("doe", "Draw a Latin hypercube plan");
  c_doe->add_option("--space", doe.space, "Configuration space JSON")->required();
  c_doe->add_option("--n", doe.n, "Plan size")->capture_default_str();
  c_doe->add_option("--seed", doe.seed)->capture_default_str();
  c_doe->add_option("--out", doe.out, "Plan JSON (default: stdout)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Label configurations with a synthetic environment");
  c_synth->add_option("--space", synth.space)->required();
  c_synth->add_option("--params", synth.params, "Generator spec or resolved sidecar")->required();
  c_synth->add_option("--relatedness", synth.relatedness, "Derive a related target with this rho");
  c_synth->add_option("--gamma", synth.gamma)->capture_default_str();
  c_synth->add_option("--rel-seed", synth.rel_seed)->capture_default_str();
  c_synth->add_option("--plan", synth.plan, "Label only the plan's configurations");
  c_synth->add_option("--env-id", synth.env_id)->capture_default_str();
  c_synth->add_option("--out", synth.out, "Dataset CSV (default: stdout)");
  c_synth->add_option("--params-out", synth.params_out,
                      "Resolved parameter sidecar (default: <out>.params.json)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-base", "Train the base-environment model");
  c_train->add_option("--data", train.data)->required();
  c_train->add_option("--space", train.space)->required();
  c_train->add_option("--target", train.target)->capture_default_str();
  c_train->add_option("--folds", train.folds)->capture_default_str();
  c_train->add_option("--k-features", train.k_features)->capture_default_str();
  c_train->add_option("--seed", train.seed)->capture_default_str();
  c_train->add_option("--grid", train.grid, "Hyperparameter grid JSON (default: built-in grid)");
  c_train->add_option("--out", train.out, "Model JSON (default: stdout)");

  TransferArgs tr;
  auto* c_transfer = app.add_subcommand("transfer", "Adapt a base model from a few target shots");
  c_transfer->add_option("--base", tr.base)->required();
  c_transfer->add_option("--shots", tr.shots)->required();
  c_transfer->add_option("--source-doe", tr.source_doe)->required();
  c_transfer->add_option("--holdout", tr.holdout, "Select the learner on this set instead of LOOCV");
  c_transfer->add_option("--iterations", tr.iterations)->capture_default_str();
  c_transfer->add_option("--seed", tr.seed)->capture_default_str();
  c_transfer->add_option("--out", tr.out, "Model JSON (default: stdout)");

  PredictArgs pred;
  auto* c_predict = app.add_subcommand("predict", "Predict a dataset's configurations");
  c_predict->add_option("--model", pred.model)->required();
  c_predict->add_option("--data", pred.data)->required();
  c_predict->add_option("--out", pred.out, "Predictions CSV (default: stdout)");

  PredictArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score a model on labeled data");
  c_eval->add_option("--model", eval.model)->required();
  c_eval->add_option("--data", eval.data)->required();
  c_eval->add_option("--out", eval.out, "Report JSON (default: stdout)");

  RelatednessArgs rel;
  auto* c_rel = app.add_subcommand("relatedness", "Compare two environments' response distributions");
  c_rel->add_option("--a", rel.a)->required();
  c_rel->add_option("--b", rel.b)->required();
  c_rel->add_option("--space", rel.space, "Space JSON (default: inferred from the CSVs)");
  c_rel->add_option("--metric", rel.metric)->capture_default_str();
  c_rel->add_option("--bins", rel.bins)->capture_default_str();
  c_rel->add_option("--out", rel.out, "Report JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    one_line(msg);
    std::cerr << "leaper: error: " << msg << "\n" << app.help();
    return 1;
  }

  try {
    if (threads > 0) leaper_set_threads(threads);
    if (*c_doe) run_doe(doe);
    else if (*c_synth) run_synth(synth);
    else if (*c_train) run_train(train);
    else if (*c_transfer) run_transfer(tr);
    else if (*c_predict) run_predict(pred);
    else if (*c_eval) run_evaluate(eval);
    else if (*c_rel) run_relatedness(rel);
  } catch (Failure& f) {
    one_line(f.message);
    std::cerr << "leaper: error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    one_line(msg);
    std::cerr << "leaper: error: internal: " << msg << "\n";
    return 2;
  }
  return 0;
}
