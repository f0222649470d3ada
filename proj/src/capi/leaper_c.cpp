#include "leaper/leaper.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <string>

#include "leaper/base_model.hpp"
#include "leaper/doe.hpp"
#include "leaper/error.hpp"
#include "leaper/parallel.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/store.hpp"
#include "leaper/synth.hpp"
#include "leaper/transfer.hpp"

struct leaper_space {
  leaper::ConfigurationSpace space;
};
struct leaper_plan {
  leaper::DoePlan plan;
};
struct leaper_env {
  leaper::EnvironmentSpec spec;
};
struct leaper_dataset {
  leaper::Dataset data;
};
struct leaper_model {
  leaper::AnyModel model;
};

namespace {

thread_local std::string last_error;

template <class F>
leaper_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return LEAPER_OK;
  } catch (const leaper::Error& e) {
    last_error = e.what();
    switch (e.kind()) {
      case leaper::ErrorKind::Validation: return LEAPER_ERR_VALIDATION;
      case leaper::ErrorKind::Io: return LEAPER_ERR_IO;
      case leaper::ErrorKind::Internal: return LEAPER_ERR_INTERNAL;
    }
    return LEAPER_ERR_INTERNAL;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LEAPER_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("internal error: ") + e.what();
    return LEAPER_ERR_INTERNAL;
  } catch (...) {
    last_error = "internal error";
    return LEAPER_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) leaper::fail(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Every row must carry the model's metric.
std::vector<double> actuals(const leaper::Dataset& d, leaper::Metric m) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    auto v = d.samples[i].response(m);
    if (!v)
      leaper::fail("sample " + std::to_string(i) + " lacks metric " +
                   std::string(leaper::metric_name(m)));
    out.push_back(*v);
  }
  return out;
}

std::vector<double> predictions(const leaper::AnyModel& model, const leaper::Dataset& d) {
  std::vector<double> out;
  out.reserve(d.samples.size());
  for (const auto& s : d.samples)
    out.push_back(leaper::predict_any(model, s.profile, s.configuration));
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

extern "C" {

const char* leaper_version(void) { return "0.1.0"; }

const char* leaper_last_error(void) { return last_error.c_str(); }

void leaper_string_free(char* s) { std::free(s); }

void leaper_set_threads(unsigned n) { leaper::set_thread_count(n); }

leaper_status leaper_space_load(const char* path, leaper_space** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new leaper_space{leaper::ConfigurationSpace::load(path)};
  });
}

leaper_status leaper_space_parse(const char* json, leaper_space** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      leaper::fail(std::string("space parse error: ") + e.what());
    }
    *out = new leaper_space{leaper::ConfigurationSpace::from_json(j)};
  });
}

leaper_status leaper_space_infer(const char* const* csv_paths, size_t n, leaper_space** out) {
  return guarded([&] {
    require(csv_paths, "csv_paths");
    require(out, "out");
    std::vector<std::string> texts;
    for (size_t i = 0; i < n; ++i) {
      require(csv_paths[i], "csv path");
      texts.push_back(leaper::read_text_file(csv_paths[i]));
    }
    *out = new leaper_space{leaper::infer_space(texts)};
  });
}

uint64_t leaper_space_cardinality(const leaper_space* space) {
  return space ? space->space.cardinality() : 0;
}

void leaper_space_free(leaper_space* space) { delete space; }

leaper_status leaper_doe_lhs(const leaper_space* space, int64_t n, uint64_t seed,
                             leaper_plan** out) {
  return guarded([&] {
    require(space, "space");
    require(out, "out");
    if (n < 1) leaper::fail("n must be ≥ 1");
    *out = new leaper_plan{leaper::lhs_sample(space->space, static_cast<std::size_t>(n), seed)};
  });
}

namespace {

nlohmann::json parse_json_file(const char* path, const std::string& what) {
  try {
    return nlohmann::json::parse(leaper::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    leaper::fail(what + " parse error: " + e.what());
  }
}

}  // namespace

leaper_status leaper_plan_load(const leaper_space* space, const char* path, leaper_plan** out) {
  return guarded([&] {
    require(space, "space");
    require(path, "path");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(leaper::read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      leaper::fail(std::string("plan parse error: ") + e.what());
    }
    *out = new leaper_plan{leaper::DoePlan::from_json(j, space->space)};
  });
}

leaper_status leaper_plan_to_json(const leaper_plan* plan, char** out) {
  return guarded([&] {
    require(plan, "plan");
    require(out, "out");
    *out = dup_string(plan->plan.to_json().dump() + "\n");
  });
}

size_t leaper_plan_size(const leaper_plan* plan) {
  return plan ? plan->plan.configurations.size() : 0;
}

void leaper_plan_free(leaper_plan* plan) { delete plan; }

leaper_status leaper_env_load(const leaper_space* space, const char* path, leaper_env** out) {
  return guarded([&] {
    require(space, "space");
    require(path, "path");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(leaper::read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      leaper::fail(std::string("parameter file parse error: ") + e.what());
    }
    *out = new leaper_env{leaper::EnvironmentSpec::from_json(j, space->space)};
  });
}

leaper_status leaper_env_related(const leaper_space* space, const leaper_env* source,
                                 double rho, double gamma, uint64_t seed, leaper_env** out) {
  return guarded([&] {
    require(space, "space");
    require(source, "source");
    require(out, "out");
    leaper::EnvironmentSpec target = source->spec;
    target.surface =
        leaper::derive_related_env(source->spec.surface, space->space, {rho, gamma, seed});
    *out = new leaper_env{std::move(target)};
  });
}

leaper_status leaper_env_to_json(const leaper_env* env, char** out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    *out = dup_string(env->spec.to_json().dump() + "\n");
  });
}

leaper_status leaper_env_generate(const leaper_space* space, const leaper_env* env,
                                  const leaper_plan* plan, const char* env_id,
                                  leaper_dataset** out) {
  return guarded([&] {
    require(space, "space");
    require(env, "env");
    require(out, "out");
    std::optional<std::span<const leaper::Configuration>> configs;
    if (plan) {
      if (!(plan->plan.space == space->space)) leaper::fail("plan was drawn from a different space");
      configs = std::span<const leaper::Configuration>(plan->plan.configurations);
    }
    *out = new leaper_dataset{leaper::gen_environment(space->space, env->spec.profile,
                                                      env->spec.surface, configs,
                                                      env_id ? env_id : "synthetic")};
  });
}

void leaper_env_free(leaper_env* env) { delete env; }

leaper_status leaper_dataset_read(const leaper_space* space, const char* path,
                                  leaper_dataset** out) {
  return guarded([&] {
    require(space, "space");
    require(path, "path");
    require(out, "out");
    *out = new leaper_dataset{leaper::read_dataset(path, space->space)};
  });
}

leaper_status leaper_dataset_write(const leaper_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    leaper::write_dataset(dataset->data, path);
  });
}

leaper_status leaper_dataset_to_csv(const leaper_dataset* dataset, char** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = dup_string(leaper::dataset_to_csv(dataset->data));
  });
}

size_t leaper_dataset_size(const leaper_dataset* dataset) {
  return dataset ? dataset->data.samples.size() : 0;
}

void leaper_dataset_free(leaper_dataset* dataset) { delete dataset; }

void leaper_train_options_init(leaper_train_options* options) {
  if (!options) return;
  options->metric = "exec_ms";
  options->folds = 5;
  options->k_features = leaper::kDefaultFeatureCount;
  options->seed = 0;
  options->grid_path = nullptr;
}

leaper_status leaper_train_base(const leaper_dataset* data, const leaper_train_options* options,
                                leaper_model** out) {
  return guarded([&] {
    require(data, "data");
    require(options, "options");
    require(out, "out");
    leaper::TrainOptions opts;
    opts.metric = leaper::parse_metric(options->metric ? options->metric : "exec_ms");
    opts.folds = options->folds;
    opts.k_features = options->k_features;
    opts.seed = options->seed;
    if (options->grid_path)
      opts.grid = leaper::grid_from_json(parse_json_file(options->grid_path, "hyperparameter grid"));
    *out = new leaper_model{leaper::train_base_model(data->data, opts)};
  });
}

void leaper_transfer_options_init(leaper_transfer_options* options) {
  if (!options) return;
  options->iterations = leaper::TransferOptions{}.max_iterations;
  options->seed = 0;
  options->holdout = nullptr;
}

leaper_status leaper_transfer(const leaper_model* base, const leaper_dataset* shots,
                              const leaper_dataset* source_doe,
                              const leaper_transfer_options* options, leaper_model** out) {
  return guarded([&] {
    require(base, "base");
    require(shots, "shots");
    require(source_doe, "source_doe");
    require(options, "options");
    require(out, "out");
    const auto* b = std::get_if<leaper::BaseModel>(&base->model);
    if (!b) leaper::fail("transfer needs a base model, got a transfer model");
    leaper::TransferOptions opts;
    opts.max_iterations = options->iterations;
    opts.seed = options->seed;
    if (options->holdout) {
      opts.selection = leaper::SelectionMode::Holdout;
      opts.holdout = &options->holdout->data;
    }
    leaper::FewShotSet fs{shots->data.env_id, shots->data.samples};
    *out = new leaper_model{leaper::transfer(std::make_shared<const leaper::BaseModel>(*b), fs,
                                             source_doe->data, opts)};
  });
}

leaper_status leaper_model_load(const char* path, leaper_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new leaper_model{leaper::load_model(path)};
  });
}

leaper_status leaper_model_save(const leaper_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    leaper::save_model(model->model, path);
  });
}

leaper_status leaper_model_to_json(const leaper_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup_string(leaper::model_to_string(model->model));
  });
}

leaper_status leaper_model_space(const leaper_model* model, leaper_space** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = new leaper_space{leaper::model_space(model->model)};
  });
}

leaper_status leaper_model_warnings(const leaper_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    std::string text;
    if (const auto* t = std::get_if<leaper::TransferModel>(&model->model))
      for (const auto& w : t->warnings) text += w + "\n";
    *out = dup_string(text);
  });
}

void leaper_model_free(leaper_model* model) { delete model; }

leaper_status leaper_predict_csv(const leaper_model* model, const leaper_dataset* data,
                                 char** out) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    require(out, "out");
    const auto values = predictions(model->model, data->data);
    std::string csv =
        "row,predicted_" + std::string(leaper::metric_column(leaper::model_metric(model->model))) +
        "\n";
    for (std::size_t i = 0; i < values.size(); ++i)
      csv += std::to_string(i) + "," + format_real(values[i]) + "\n";
    *out = dup_string(csv);
  });
}

leaper_status leaper_predict(const leaper_model* model, const leaper_dataset* data,
                             double* values, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    if (capacity < data->data.samples.size())
      leaper::fail("output buffer holds " + std::to_string(capacity) + " values, need " +
                   std::to_string(data->data.samples.size()));
    require(values, "values");
    const auto p = predictions(model->model, data->data);
    std::copy(p.begin(), p.end(), values);
  });
}

leaper_status leaper_evaluate(const leaper_model* model, const leaper_dataset* data, char** out) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    require(out, "out");
    if (data->data.samples.empty()) leaper::fail("evaluation data is empty");
    const auto y = actuals(data->data, leaper::model_metric(model->model));
    const auto p = predictions(model->model, data->data);
    const double m = leaper::mre(p, y);
    nlohmann::json j{{"mre", m},
                     {"accuracy_pct", leaper::accuracy_from_mre(m)},
                     {"n", data->data.samples.size()}};
    *out = dup_string(j.dump() + "\n");
  });
}

leaper_status leaper_relatedness(const leaper_dataset* a, const leaper_dataset* b,
                                 const char* metric, size_t bins, char** out, char** warnings) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    const auto report = leaper::relatedness_report(
        a->data, b->data, leaper::parse_metric(metric ? metric : "exec_ms"), bins);
    std::string w;
    for (const auto& line : report.warnings) w += line + "\n";
    char* report_text = dup_string(report.to_json().dump() + "\n");
    if (warnings) {
      try {
        *warnings = dup_string(w);
      } catch (...) {
        std::free(report_text);
        throw;
      }
    }
    *out = report_text;
  });
}

}  // extern "C"
