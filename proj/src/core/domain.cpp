#include "leaper/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "leaper/error.hpp"

namespace leaper {

namespace {

std::string format_level(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the short spelling when it round-trips.
  char short_buf[64];
  std::snprintf(short_buf, sizeof short_buf, "%g", v);
  return std::strtod(short_buf, nullptr) == v ? short_buf : buf;
}

std::string json_scalar_label(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "on" : "off";
  if (v.is_number()) return format_level(v.get<double>());
  fail("option level must be a string, number or boolean");
}

}  // namespace

std::string_view to_string(OptionKind kind) {
  switch (kind) {
    case OptionKind::Binary: return "binary";
    case OptionKind::Ordinal: return "ordinal";
    case OptionKind::Categorical: return "categorical";
  }
  return "binary";
}

OptionKind parse_option_kind(std::string_view text) {
  if (text == "binary") return OptionKind::Binary;
  if (text == "ordinal") return OptionKind::Ordinal;
  if (text == "categorical") return OptionKind::Categorical;
  fail("unknown option kind '" + std::string(text) + "'");
}

OptimizationOption OptimizationOption::binary(std::string name) {
  OptimizationOption o;
  o.name = std::move(name);
  o.kind = OptionKind::Binary;
  o.labels = {"off", "on"};
  return o;
}

OptimizationOption OptimizationOption::ordinal(std::string name, std::vector<double> levels) {
  OptimizationOption o;
  o.name = std::move(name);
  o.kind = OptionKind::Ordinal;
  for (double v : levels) o.labels.push_back(format_level(v));
  o.numeric_levels = std::move(levels);
  return o;
}

OptimizationOption OptimizationOption::categorical(std::string name,
                                                   std::vector<std::string> labels) {
  OptimizationOption o;
  o.name = std::move(name);
  o.kind = OptionKind::Categorical;
  o.labels = std::move(labels);
  return o;
}

void OptimizationOption::check() const {
  if (name.empty()) fail("option name must not be empty");
  if (labels.empty()) fail("option '" + name + "' has no levels");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) fail("option '" + name + "' has duplicate levels");
  switch (kind) {
    case OptionKind::Binary:
      if (labels.size() != 2) fail("binary option '" + name + "' must have exactly 2 levels");
      break;
    case OptionKind::Ordinal:
      if (numeric_levels.size() != labels.size())
        fail("ordinal option '" + name + "' needs numeric levels");
      for (std::size_t i = 0; i < numeric_levels.size(); ++i) {
        if (!std::isfinite(numeric_levels[i]))
          fail("ordinal option '" + name + "' has a non-finite level");
        if (i > 0 && !(numeric_levels[i] > numeric_levels[i - 1]))
          fail("ordinal option '" + name + "' levels must be strictly increasing");
      }
      break;
    case OptionKind::Categorical:
      break;
  }
}

ConfigurationSpace::ConfigurationSpace(std::vector<OptimizationOption> options)
    : options_(std::move(options)) {
  for (const auto& o : options_) {
    o.check();
    encoded_width_ += o.encoded_width();
  }
}

std::uint64_t ConfigurationSpace::cardinality() const {
  std::uint64_t total = 1;
  for (const auto& o : options_) {
    const std::uint64_t l = o.level_count();
    if (total > std::numeric_limits<std::uint64_t>::max() / l)
      return std::numeric_limits<std::uint64_t>::max();
    total *= l;
  }
  return total;
}

std::string ConfigurationSpace::check_configuration(const Configuration& config) const {
  if (config.levels.size() != options_.size()) {
    std::ostringstream msg;
    msg << "configuration has " << config.levels.size() << " assignments, space has "
        << options_.size() << " options";
    if (config.levels.size() < options_.size())
      msg << "; missing option '" << options_[config.levels.size()].name << "'";
    return msg.str();
  }
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (config.levels[i] >= options_[i].level_count()) {
      std::ostringstream msg;
      msg << "option '" << options_[i].name << "' (position " << i << ") level index "
          << config.levels[i] << " out of range [0, " << options_[i].level_count() << ")";
      return msg.str();
    }
  }
  return {};
}

std::vector<double> ConfigurationSpace::encode(const Configuration& config) const {
  std::vector<double> out(encoded_width_);
  encode_into(config, out);
  return out;
}

void ConfigurationSpace::encode_into(const Configuration& config, std::span<double> out) const {
  if (auto problem = check_configuration(config); !problem.empty()) fail(problem);
  if (out.size() != encoded_width_) fail("encoding buffer has wrong width");
  std::size_t k = 0;
  for (std::size_t i = 0; i < options_.size(); ++i) {
    const auto& o = options_[i];
    const auto level = config.levels[i];
    switch (o.kind) {
      case OptionKind::Binary:
        out[k++] = level == 0 ? 0.0 : 1.0;
        break;
      case OptionKind::Ordinal:
        out[k++] = o.numeric_levels[level];
        break;
      case OptionKind::Categorical:
        for (std::size_t c = 0; c < o.labels.size(); ++c) out[k++] = c == level ? 1.0 : 0.0;
        break;
    }
  }
}

Configuration ConfigurationSpace::configuration_at(std::uint64_t index) const {
  Configuration c;
  c.levels.resize(options_.size());
  for (std::size_t i = options_.size(); i-- > 0;) {
    const std::uint64_t l = options_[i].level_count();
    c.levels[i] = static_cast<std::uint32_t>(index % l);
    index /= l;
  }
  return c;
}

std::uint64_t ConfigurationSpace::index_of(const Configuration& config) const {
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < options_.size(); ++i)
    index = index * options_[i].level_count() + config.levels[i];
  return index;
}

std::vector<Configuration> ConfigurationSpace::enumerate(std::uint64_t max_count) const {
  const auto n = cardinality();
  if (n > max_count) {
    fail("space cardinality " + std::to_string(n) + " exceeds enumeration cap " +
         std::to_string(max_count));
  }
  std::vector<Configuration> all;
  all.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) all.push_back(configuration_at(i));
  return all;
}

std::string ConfigurationSpace::column_name(std::size_t position) const {
  return "opt_" + std::to_string(position) + "_" + options_.at(position).name;
}

nlohmann::json ConfigurationSpace::to_json() const {
  auto options = nlohmann::json::array();
  for (const auto& o : options_) {
    nlohmann::json entry;
    entry["name"] = o.name;
    entry["kind"] = std::string(to_string(o.kind));
    if (o.kind == OptionKind::Ordinal)
      entry["levels"] = o.numeric_levels;
    else
      entry["levels"] = o.labels;
    options.push_back(std::move(entry));
  }
  return nlohmann::json{{"options", std::move(options)}};
}

ConfigurationSpace ConfigurationSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("options") || !j["options"].is_array())
    fail("configuration space JSON must be an object with an 'options' array");
  std::vector<OptimizationOption> options;
  for (const auto& entry : j["options"]) {
    if (!entry.contains("name") || !entry["name"].is_string())
      fail("every option needs a string 'name'");
    const auto name = entry["name"].get<std::string>();
    const auto kind = parse_option_kind(entry.value("kind", std::string("binary")));
    if (!entry.contains("levels")) {
      if (kind != OptionKind::Binary) fail("option '" + name + "' needs 'levels'");
      options.push_back(OptimizationOption::binary(name));
      continue;
    }
    const auto& levels = entry["levels"];
    if (!levels.is_array()) fail("option '" + name + "' levels must be an array");
    if (kind == OptionKind::Ordinal) {
      std::vector<double> values;
      for (const auto& v : levels) {
        if (!v.is_number()) fail("ordinal option '" + name + "' levels must be numbers");
        values.push_back(v.get<double>());
      }
      options.push_back(OptimizationOption::ordinal(name, std::move(values)));
    } else {
      OptimizationOption o;
      o.name = name;
      o.kind = kind;
      for (const auto& v : levels) o.labels.push_back(json_scalar_label(v));
      options.push_back(std::move(o));
    }
  }
  return ConfigurationSpace(std::move(options));
}

ConfigurationSpace ConfigurationSpace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open space file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail_io("cannot parse space file '" + path + "': " + e.what());
  }
  return from_json(j);
}

bool ConfigurationSpace::operator==(const ConfigurationSpace& other) const {
  if (options_.size() != other.options_.size()) return false;
  for (std::size_t i = 0; i < options_.size(); ++i) {
    const auto& a = options_[i];
    const auto& b = other.options_[i];
    if (a.name != b.name || a.kind != b.kind || a.labels != b.labels ||
        a.numeric_levels != b.numeric_levels)
      return false;
  }
  return true;
}

bool ApplicationProfile::is_fraction_feature(std::string_view name) {
  return name.starts_with("mix_") || name.starts_with("reuse_");
}

std::vector<std::string> ApplicationProfile::problems() const {
  std::vector<std::string> out;
  if (names.size() != values.size()) {
    out.push_back("profile has " + std::to_string(names.size()) + " names but " +
                  std::to_string(values.size()) + " values");
    return out;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen.insert(names[i]).second) out.push_back("duplicate profile feature '" + names[i] + "'");
    const double v = values[i];
    if (!std::isfinite(v)) {
      out.push_back("profile feature '" + names[i] + "' is not finite");
    } else if (is_fraction_feature(names[i]) && (v < 0.0 || v > 1.0)) {
      out.push_back("profile feature '" + names[i] + "' must lie in [0, 1]");
    }
  }
  return out;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::ExecTimeMs: return "exec_time_ms";
    case Metric::BramFrac: return "bram_frac";
    case Metric::DspFrac: return "dsp_frac";
    case Metric::FfFrac: return "ff_frac";
    case Metric::LutFrac: return "lut_frac";
  }
  return "exec_time_ms";
}

std::string_view metric_column(Metric m) {
  switch (m) {
    case Metric::ExecTimeMs: return "exec_ms";
    case Metric::BramFrac: return "bram";
    case Metric::DspFrac: return "dsp";
    case Metric::FfFrac: return "ff";
    case Metric::LutFrac: return "lut";
  }
  return "exec_ms";
}

Metric parse_metric(std::string_view text) {
  for (Metric m : kAllMetrics)
    if (text == metric_name(m) || text == metric_column(m)) return m;
  fail("unknown metric '" + std::string(text) + "'");
}

bool is_resource_metric(Metric m) { return m != Metric::ExecTimeMs; }

std::string check_response(Metric m, double value) {
  if (!std::isfinite(value)) return "value is not finite";
  if (m == Metric::ExecTimeMs) {
    if (!(value > 0.0)) return "execution time must be > 0";
  } else if (value < 0.0 || value > 1.0) {
    return "resource fraction must lie in [0, 1]";
  }
  return {};
}

double clamp_prediction(Metric m, double value) {
  if (m == Metric::ExecTimeMs) return std::isnan(value) || value < 1e-9 ? 1e-9 : value;
  if (std::isnan(value)) return 0.0;
  return std::min(1.0, std::max(0.0, value));
}

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> report;
  const std::vector<std::string>* schema = nullptr;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (auto problem = dataset.space.check_configuration(s.configuration); !problem.empty()) {
      std::string field = "configuration";
      const auto& opts = dataset.space.options();
      const auto& levels = s.configuration.levels;
      if (levels.size() < opts.size()) {
        field = opts[levels.size()].name;
      } else {
        for (std::size_t k = 0; k < opts.size(); ++k)
          if (levels[k] >= opts[k].level_count()) {
            field = opts[k].name;
            break;
          }
      }
      report.push_back({i, field, problem});
    }
    for (const auto& p : s.profile.problems()) report.push_back({i, "profile", p});
    if (schema == nullptr) {
      schema = &s.profile.names;
    } else if (*schema != s.profile.names) {
      report.push_back({i, "profile", "profile feature names differ from sample 0"});
    }
    if (s.responses.empty()) report.push_back({i, "responses", "no response recorded"});
    for (const auto& [metric, value] : s.responses) {
      if (auto problem = check_response(metric, value); !problem.empty())
        report.push_back({i, std::string(metric_name(metric)), problem});
    }
  }
  return report;
}

}  // namespace leaper
