#pragma once

// Configuration spaces, application profiles, samples and datasets.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace leaper {

enum class OptionKind { Binary, Ordinal, Categorical };

std::string_view to_string(OptionKind kind);
OptionKind parse_option_kind(std::string_view text);

// One pragma axis (PL, UR, PR_type, ...). Binary options have exactly two
// levels (off, on); ordinal levels carry strictly increasing numeric values;
// categorical levels are labels that encode one-hot.
struct OptimizationOption {
  std::string name;
  OptionKind kind = OptionKind::Binary;
  std::vector<std::string> labels;      // display label per level
  std::vector<double> numeric_levels;   // ordinal only

  std::size_t level_count() const { return labels.size(); }
  std::size_t encoded_width() const {
    return kind == OptionKind::Categorical ? labels.size() : 1;
  }

  static OptimizationOption binary(std::string name);
  static OptimizationOption ordinal(std::string name, std::vector<double> levels);
  static OptimizationOption categorical(std::string name, std::vector<std::string> labels);

  // Throws if the level list violates the option invariants.
  void check() const;
};

struct Configuration {
  std::vector<std::uint32_t> levels;  // one level index per option, in space order

  auto operator<=>(const Configuration&) const = default;
};

class ConfigurationSpace {
 public:
  ConfigurationSpace() = default;
  explicit ConfigurationSpace(std::vector<OptimizationOption> options);

  const std::vector<OptimizationOption>& options() const { return options_; }
  std::size_t size() const { return options_.size(); }
  bool empty() const { return options_.empty(); }

  // Product of level counts. Saturates at UINT64_MAX.
  std::uint64_t cardinality() const;

  std::size_t encoded_width() const { return encoded_width_; }

  // Empty string when valid, otherwise a message naming the offending option.
  std::string check_configuration(const Configuration& config) const;

  std::vector<double> encode(const Configuration& config) const;
  void encode_into(const Configuration& config, std::span<double> out) const;

  // Mixed-radix decoding, first option most significant.
  Configuration configuration_at(std::uint64_t index) const;
  std::uint64_t index_of(const Configuration& config) const;

  // Every configuration in index order. Throws past max_count.
  std::vector<Configuration> enumerate(std::uint64_t max_count = 100000) const;

  // Column name used by dataset files: opt_<position>_<name>.
  std::string column_name(std::size_t position) const;

  nlohmann::json to_json() const;
  static ConfigurationSpace from_json(const nlohmann::json& j);
  static ConfigurationSpace load(const std::string& path);

  bool operator==(const ConfigurationSpace& other) const;

 private:
  std::vector<OptimizationOption> options_;
  std::size_t encoded_width_ = 0;
};

struct ApplicationProfile {
  std::vector<std::string> names;
  std::vector<double> values;

  // Names starting with mix_ or reuse_ hold fractions in [0, 1].
  static bool is_fraction_feature(std::string_view name);

  // Empty when valid, otherwise one message per problem.
  std::vector<std::string> problems() const;
};

enum class Metric { ExecTimeMs, BramFrac, DspFrac, FfFrac, LutFrac };

inline constexpr Metric kAllMetrics[] = {Metric::ExecTimeMs, Metric::BramFrac,
                                         Metric::DspFrac, Metric::FfFrac,
                                         Metric::LutFrac};

std::string_view metric_name(Metric m);    // exec_time_ms, bram_frac, ...
std::string_view metric_column(Metric m);  // exec_ms, bram, ...
// Accepts either spelling.
Metric parse_metric(std::string_view text);
bool is_resource_metric(Metric m);

// Empty when the value satisfies the metric's range, else a message.
std::string check_response(Metric m, double value);

// Clamps a raw prediction into the metric's admissible range.
double clamp_prediction(Metric m, double value);

struct Sample {
  ApplicationProfile profile;
  Configuration configuration;
  std::map<Metric, double> responses;

  std::optional<double> response(Metric m) const {
    auto it = responses.find(m);
    if (it == responses.end()) return std::nullopt;
    return it->second;
  }
};

struct Dataset {
  std::string env_id;
  ConfigurationSpace space;
  std::vector<Sample> samples;
};

struct Violation {
  std::size_t sample;
  std::string field;
  std::string message;
};

std::vector<Violation> validate_dataset(const Dataset& dataset);

}  // namespace leaper
