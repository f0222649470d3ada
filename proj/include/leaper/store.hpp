#pragma once

// Dataset CSV and model JSON files.
//
// Dataset header: env_id,<profile names...>,opt_<i>_<name>...,<responses>
// where responses are the present subset of exec_ms,bram,dsp,ff,lut in that
// order. Option cells hold level indices; reals use 17 significant digits.

#include <span>
#include <string>
#include <variant>

#include "json.hpp"
#include "leaper/base_model.hpp"
#include "leaper/domain.hpp"
#include "leaper/transfer.hpp"

namespace leaper {

inline constexpr int kModelFormatVersion = 1;

std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& text, const ConfigurationSpace& space);
// Placeholder space from the option columns of one or more CSV texts: each
// column becomes an ordinal option with levels 0..max index seen in any text.
// All texts must carry the same option columns.
ConfigurationSpace infer_space(std::span<const std::string> csv_texts);
Dataset dataset_from_csv_inferred(const std::string& text);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path, const ConfigurationSpace& space);
Dataset read_dataset_inferred(const std::string& path);

using AnyModel = std::variant<BaseModel, TransferModel>;

Metric model_metric(const AnyModel& model);
const ConfigurationSpace& model_space(const AnyModel& model);
double predict_any(const AnyModel& model, const ApplicationProfile& profile,
                   const Configuration& config);

// {"forests": [candidate...], "boosting": [candidate...]}; absent candidate
// keys take the defaults.
nlohmann::json grid_to_json(const HyperGrid& grid);
HyperGrid grid_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const BaseModel& model);
nlohmann::json model_to_json(const TransferModel& model);
AnyModel model_from_json(const nlohmann::json& j);

// Serialized text, newline terminated. Identical models give identical bytes.
std::string model_to_string(const AnyModel& model);
AnyModel model_from_string(const std::string& text);

void save_model(const AnyModel& model, const std::string& path);
AnyModel load_model(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace leaper
