#include "leaper/store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "leaper/error.hpp"

namespace leaper {

namespace {

using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

double parse_real(const std::string& s, std::size_t line, const std::string& column) {
  if (s.empty()) fail(line_error(line, "empty value in column '" + column + "'"));
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    fail(line_error(line, "cannot parse '" + s + "' in column '" + column + "' as a number"));
  return v;
}

std::uint32_t parse_level(const std::string& s, std::size_t line, const std::string& column) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    fail(line_error(line, "level index '" + s + "' in column '" + column + "' is not an integer"));
  const unsigned long v = std::strtoul(s.c_str(), nullptr, 10);
  if (v > UINT32_MAX) fail(line_error(line, "level index out of range in column '" + column + "'"));
  return static_cast<std::uint32_t>(v);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

struct Header {
  std::vector<std::string> profile;
  std::vector<std::string> options;
  std::vector<Metric> responses;
  std::size_t width = 0;
};

Header parse_header(const std::string& line) {
  const auto cols = split_fields(line);
  if (cols.empty() || cols[0] != "env_id") fail(line_error(1, "first column must be 'env_id'"));
  std::set<std::string> seen;
  for (const auto& c : cols)
    if (!seen.insert(c).second) fail(line_error(1, "duplicate column '" + c + "'"));
  Header h;
  h.width = cols.size();
  std::size_t k = 1;
  for (; k < cols.size() && !cols[k].starts_with("opt_"); ++k) {
    bool is_response = false;
    for (Metric m : kAllMetrics) is_response = is_response || cols[k] == metric_column(m);
    if (is_response) break;
    h.profile.push_back(cols[k]);
  }
  for (; k < cols.size() && cols[k].starts_with("opt_"); ++k) h.options.push_back(cols[k]);
  for (; k < cols.size(); ++k) {
    Metric m;
    try {
      m = parse_metric(cols[k]);
    } catch (const Error&) {
      fail(line_error(1, "unexpected column '" + cols[k] + "'"));
    }
    if (cols[k] != metric_column(m)) fail(line_error(1, "unexpected column '" + cols[k] + "'"));
    h.responses.push_back(m);
  }
  return h;
}

Dataset parse_rows(const std::vector<std::string>& lines, const Header& h,
                   const ConfigurationSpace& space) {
  Dataset d;
  d.space = space;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::size_t line_no = r + 1;
    const auto fields = split_fields(lines[r]);
    if (fields.size() != h.width)
      fail(line_error(line_no, "expected " + std::to_string(h.width) + " fields, found " +
                                   std::to_string(fields.size())));
    if (d.samples.empty()) d.env_id = fields[0];
    Sample s;
    std::size_t k = 1;
    s.profile.names = h.profile;
    for (const auto& name : h.profile) s.profile.values.push_back(parse_real(fields[k++], line_no, name));
    for (std::size_t j = 0; j < h.options.size(); ++j) {
      const auto level = parse_level(fields[k++], line_no, h.options[j]);
      if (level >= space.options()[j].level_count())
        fail(line_error(line_no, "level index " + std::to_string(level) + " out of range for column '" +
                                     h.options[j] + "'"));
      s.configuration.levels.push_back(level);
    }
    for (Metric m : h.responses) {
      const auto& cell = fields[k++];
      if (!cell.empty()) s.responses[m] = parse_real(cell, line_no, std::string(metric_column(m)));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

json tree_to_json(const RegressionTree& t) {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold, value, weight, sse;
  std::vector<std::uint32_t> count;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    weight.push_back(n.weight);
    sse.push_back(n.sse);
    count.push_back(n.count);
  }
  return json{{"n_features", t.n_features}, {"feature", feature}, {"threshold", threshold},
              {"left", left},   {"right", right},   {"value", value},
              {"weight", weight}, {"sse", sse},     {"count", count}};
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree t;
  t.n_features = j.at("n_features").get<std::size_t>();
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto weight = j.at("weight").get<std::vector<double>>();
  const auto sse = j.at("sse").get<std::vector<double>>();
  const auto count = j.at("count").get<std::vector<std::uint32_t>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      value.size() != n || weight.size() != n || sse.size() != n || count.size() != n)
    fail("tree node arrays are empty or have inconsistent lengths");
  t.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = t.nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i], weight[i], sse[i], count[i]};
    if (!node.is_leaf()) {
      if (node.left <= static_cast<std::int32_t>(i) || node.right <= static_cast<std::int32_t>(i) ||
          node.left >= static_cast<std::int32_t>(n) || node.right >= static_cast<std::int32_t>(n) ||
          static_cast<std::size_t>(node.feature) >= t.n_features)
        fail("tree node " + std::to_string(i) + " has invalid links");
    }
  }
  return t;
}

json trees_to_json(const std::vector<RegressionTree>& trees) {
  auto out = json::array();
  for (const auto& t : trees) out.push_back(tree_to_json(t));
  return out;
}

std::vector<RegressionTree> trees_from_json(const json& j) {
  std::vector<RegressionTree> out;
  for (const auto& t : j) out.push_back(tree_from_json(t));
  return out;
}

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> optional_size(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

std::string_view rule_name(FeatureRule r) {
  switch (r) {
    case FeatureRule::Third: return "third";
    case FeatureRule::Sqrt: return "sqrt";
    case FeatureRule::All: return "all";
    case FeatureRule::Fixed: return "fixed";
  }
  return "third";
}

FeatureRule parse_rule(const std::string& s) {
  for (auto r : {FeatureRule::Third, FeatureRule::Sqrt, FeatureRule::All, FeatureRule::Fixed})
    if (s == rule_name(r)) return r;
  fail("unknown feature rule '" + s + "'");
}

json forest_candidate_to_json(const ForestCandidate& c) {
  return {{"n_trees", c.n_trees},
          {"rule", std::string(rule_name(c.rule))},
          {"fixed_features", c.fixed_features},
          {"min_samples_leaf", c.min_samples_leaf},
          {"max_depth", optional_size(c.max_depth)},
          {"bootstrap", c.bootstrap}};
}

json boosting_candidate_to_json(const BoostingCandidate& c) {
  return {{"n_stages", c.n_stages},
          {"learning_rate", c.learning_rate},
          {"max_depth", optional_size(c.max_depth)},
          {"min_samples_leaf", c.min_samples_leaf}};
}

// Absent keys keep the candidate defaults, so hand-written grids can be terse.
ForestCandidate forest_candidate_from_json(const json& j) {
  ForestCandidate c;
  c.n_trees = j.value("n_trees", c.n_trees);
  if (j.contains("rule")) c.rule = parse_rule(j.at("rule").get<std::string>());
  c.fixed_features = j.value("fixed_features", c.fixed_features);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  if (j.contains("max_depth")) c.max_depth = optional_size(j.at("max_depth"));
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  if (c.n_trees < 1) fail("forest candidate needs n_trees ≥ 1");
  if (c.min_samples_leaf < 1) fail("min_samples_leaf must be ≥ 1");
  if (c.rule == FeatureRule::Fixed && c.fixed_features < 1) fail("fixed feature rule needs fixed_features ≥ 1");
  return c;
}

BoostingCandidate boosting_candidate_from_json(const json& j) {
  BoostingCandidate c;
  c.n_stages = j.value("n_stages", c.n_stages);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("max_depth")) c.max_depth = optional_size(j.at("max_depth"));
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) fail("learning_rate must lie in (0, 1]");
  if (c.min_samples_leaf < 1) fail("min_samples_leaf must be ≥ 1");
  return c;
}

json base_body(const BaseModel& m) {
  json j;
  j["env_id"] = m.env_id;
  j["metric"] = std::string(metric_column(m.metric));
  j["space"] = m.space.to_json();
  j["profile_names"] = m.profile_names;
  j["normalizer"] = {{"min", m.normalizer.min}, {"max", m.normalizer.max}};
  j["selection"] = {{"indices", m.selection.indices}, {"k", m.selection.k},
                    {"no_signal", m.selection.no_signal}};
  j["forest"] = {{"bootstrap", m.forest.bootstrap}, {"seed", m.forest.seed},
                 {"trees", trees_to_json(m.forest.trees)}};
  j["gbm"] = {{"init_value", m.gbm.init_value}, {"learning_rate", m.gbm.learning_rate},
              {"stages", trees_to_json(m.gbm.stages)}};
  j["forest_params"] = forest_candidate_to_json(m.forest_params);
  j["boosting_params"] = boosting_candidate_to_json(m.boosting_params);
  auto scores = [](const std::vector<CvScore>& v) {
    auto a = json::array();
    for (const auto& s : v) a.push_back({{"candidate", s.candidate}, {"mean_mre", s.mean_mre}});
    return a;
  };
  j["cv_report"] = {{"folds", m.cv_report.folds},
                    {"forest", scores(m.cv_report.forest_scores)},
                    {"boosting", scores(m.cv_report.boosting_scores)},
                    {"chosen_forest", m.cv_report.chosen_forest},
                    {"chosen_boosting", m.cv_report.chosen_boosting}};
  return j;
}

BaseModel base_from_body(const json& j) {
  BaseModel m;
  m.env_id = j.at("env_id").get<std::string>();
  m.metric = parse_metric(j.at("metric").get<std::string>());
  m.space = ConfigurationSpace::from_json(j.at("space"));
  m.profile_names = j.at("profile_names").get<std::vector<std::string>>();
  m.normalizer.min = j.at("normalizer").at("min").get<std::vector<double>>();
  m.normalizer.max = j.at("normalizer").at("max").get<std::vector<double>>();
  const auto& sel = j.at("selection");
  m.selection.indices = sel.at("indices").get<std::vector<std::size_t>>();
  m.selection.k = sel.at("k").get<std::size_t>();
  m.selection.no_signal = sel.at("no_signal").get<bool>();
  const auto& f = j.at("forest");
  m.forest.bootstrap = f.at("bootstrap").get<bool>();
  m.forest.seed = f.at("seed").get<std::uint64_t>();
  m.forest.trees = trees_from_json(f.at("trees"));
  const auto& g = j.at("gbm");
  m.gbm.init_value = g.at("init_value").get<double>();
  m.gbm.learning_rate = g.at("learning_rate").get<double>();
  m.gbm.stages = trees_from_json(g.at("stages"));
  m.forest_params = forest_candidate_from_json(j.at("forest_params"));
  m.boosting_params = boosting_candidate_from_json(j.at("boosting_params"));
  const auto& cv = j.at("cv_report");
  m.cv_report.folds = cv.at("folds").get<std::size_t>();
  for (const auto& s : cv.at("forest"))
    m.cv_report.forest_scores.push_back({s.at("candidate").get<std::size_t>(), s.at("mean_mre").get<double>()});
  for (const auto& s : cv.at("boosting"))
    m.cv_report.boosting_scores.push_back({s.at("candidate").get<std::size_t>(), s.at("mean_mre").get<double>()});
  m.cv_report.chosen_forest = cv.at("chosen_forest").get<std::size_t>();
  m.cv_report.chosen_boosting = cv.at("chosen_boosting").get<std::size_t>();

  const std::size_t raw_dim = m.profile_names.size() + m.space.encoded_width();
  if (m.normalizer.min.size() != raw_dim || m.normalizer.max.size() != raw_dim)
    fail("normalizer dimension does not match profile schema and space");
  for (auto idx : m.selection.indices)
    if (idx >= raw_dim) fail("selected feature index out of range");
  if (m.forest.trees.empty()) fail("forest has no trees");
  for (const auto* trees : {&m.forest.trees, &m.gbm.stages})
    for (const auto& t : *trees)
      if (t.n_features != m.selection.indices.size())
        fail("tree dimension does not match the selected feature count");
  return m;
}

json learner_to_json(const TransferModel& m) {
  if (const auto* gp = std::get_if<GaussianProcessModel>(&m.learner)) {
    std::vector<std::vector<double>> inputs;
    for (std::size_t i = 0; i < gp->inputs().rows; ++i) {
      auto r = gp->inputs().row(i);
      inputs.emplace_back(r.begin(), r.end());
    }
    return json{{"kind", "gp"},
                {"length_scale", gp->params().length_scale},
                {"signal_variance", gp->params().signal_variance},
                {"noise_variance", gp->params().noise_variance},
                {"jitter", gp->jitter()},
                {"inputs", inputs},
                {"targets", gp->targets()}};
  }
  const auto& tb = std::get<TrAdaBoostModel>(m.learner);
  return json{{"kind", "tradaboost"},
              {"constant", tb.constant},
              {"constant_value", tb.constant_value},
              {"stopped_early", tb.stopped_early},
              {"betas", tb.betas},
              {"learners", trees_to_json(tb.learners)}};
}

std::variant<TrAdaBoostModel, GaussianProcessModel> learner_from_json(const json& j) {
  const auto kind = parse_transfer_learner(j.at("kind").get<std::string>());
  if (kind == TransferLearnerKind::GaussianProcess) {
    KernelParams p{j.at("length_scale").get<double>(), j.at("signal_variance").get<double>(),
                   j.at("noise_variance").get<double>()};
    const auto inputs = j.at("inputs").get<std::vector<std::vector<double>>>();
    auto targets = j.at("targets").get<std::vector<double>>();
    if (inputs.empty() || inputs.size() != targets.size()) fail("GP inputs and targets disagree");
    return GaussianProcessModel::restore(Matrix::from_rows(inputs), std::move(targets), p,
                                         j.at("jitter").get<double>());
  }
  TrAdaBoostModel tb;
  tb.constant = j.at("constant").get<bool>();
  tb.constant_value = j.at("constant_value").get<double>();
  tb.stopped_early = j.at("stopped_early").get<bool>();
  tb.betas = j.at("betas").get<std::vector<double>>();
  tb.learners = trees_from_json(j.at("learners"));
  if (tb.betas.size() != tb.learners.size()) fail("boosting betas and learners disagree");
  if (!tb.constant && tb.learners.empty()) fail("boosting model has no learners");
  return tb;
}

std::string_view selection_name(SelectionMode m) {
  return m == SelectionMode::Holdout ? "holdout" : "loocv";
}

}  // namespace

std::string dataset_to_csv(const Dataset& dataset) {
  if (dataset.env_id.find_first_of(",\n\r") != std::string::npos)
    fail("env_id must not contain commas or line breaks");
  const auto& space = dataset.space;
  std::vector<std::string> profile_names;
  if (!dataset.samples.empty()) profile_names = dataset.samples.front().profile.names;
  std::vector<Metric> metrics;
  for (Metric m : kAllMetrics)
    for (const auto& s : dataset.samples)
      if (s.response(m)) {
        metrics.push_back(m);
        break;
      }

  std::string out = "env_id";
  for (const auto& n : profile_names) {
    if (n.find_first_of(",\n\r") != std::string::npos) fail("profile name '" + n + "' contains a comma");
    out += "," + n;
  }
  for (std::size_t j = 0; j < space.size(); ++j) out += "," + space.column_name(j);
  for (Metric m : metrics) out += "," + std::string(metric_column(m));
  out += "\n";

  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (s.profile.names != profile_names)
      fail("sample " + std::to_string(i) + " has a different profile schema");
    if (auto problem = space.check_configuration(s.configuration); !problem.empty())
      fail("sample " + std::to_string(i) + ": " + problem);
    out += dataset.env_id;
    for (double v : s.profile.values) out += "," + format_real(v);
    for (auto level : s.configuration.levels) out += "," + std::to_string(level);
    for (Metric m : metrics) {
      out += ",";
      if (auto v = s.response(m)) out += format_real(*v);
    }
    out += "\n";
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text, const ConfigurationSpace& space) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(line_error(1, "missing header"));
  const Header h = parse_header(lines[0]);
  for (std::size_t j = 0; j < std::max(h.options.size(), space.size()); ++j) {
    const std::string expected = j < space.size() ? space.column_name(j) : "<none>";
    const std::string found = j < h.options.size() ? h.options[j] : "<missing>";
    if (expected != found)
      fail("header column " + std::to_string(1 + h.profile.size() + j) + ": expected '" +
           expected + "', found '" + found + "'");
  }
  return parse_rows(lines, h, space);
}

ConfigurationSpace infer_space(std::span<const std::string> csv_texts) {
  if (csv_texts.empty()) fail("no data to infer a space from");
  std::vector<std::string> columns;
  std::vector<std::uint32_t> max_level;
  for (std::size_t t = 0; t < csv_texts.size(); ++t) {
    const auto lines = split_lines(csv_texts[t]);
    if (lines.empty()) fail(line_error(1, "missing header"));
    const Header h = parse_header(lines[0]);
    if (t == 0) {
      columns = h.options;
      max_level.assign(columns.size(), 0);
    } else if (h.options != columns) {
      fail("option columns differ between datasets");
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto fields = split_fields(lines[r]);
      if (fields.size() != h.width)
        fail(line_error(r + 1, "expected " + std::to_string(h.width) + " fields, found " +
                                   std::to_string(fields.size())));
      for (std::size_t j = 0; j < columns.size(); ++j)
        max_level[j] =
            std::max(max_level[j], parse_level(fields[1 + h.profile.size() + j], r + 1, columns[j]));
    }
  }
  std::vector<OptimizationOption> options;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    // opt_<i>_<name>
    const auto& col = columns[j];
    const auto sep = col.find('_', 4);
    std::string name = sep == std::string::npos ? col : col.substr(sep + 1);
    if (col != "opt_" + std::to_string(j) + "_" + name)
      fail("header column '" + col + "' does not follow opt_<position>_<name>");
    std::vector<double> levels(max_level[j] + 1);
    for (std::size_t l = 0; l < levels.size(); ++l) levels[l] = static_cast<double>(l);
    options.push_back(OptimizationOption::ordinal(name, levels));
  }
  return ConfigurationSpace(std::move(options));
}

Dataset dataset_from_csv_inferred(const std::string& text) {
  return dataset_from_csv(text, infer_space(std::span(&text, 1)));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write '" + path + "'");
  out << text;
  if (!out) fail_io("write failed for '" + path + "'");
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  write_text_file(path, dataset_to_csv(dataset));
}

Dataset read_dataset(const std::string& path, const ConfigurationSpace& space) {
  return dataset_from_csv(read_text_file(path), space);
}

Dataset read_dataset_inferred(const std::string& path) {
  return dataset_from_csv_inferred(read_text_file(path));
}

Metric model_metric(const AnyModel& model) {
  if (const auto* b = std::get_if<BaseModel>(&model)) return b->metric;
  return std::get<TransferModel>(model).base->metric;
}

const ConfigurationSpace& model_space(const AnyModel& model) {
  if (const auto* b = std::get_if<BaseModel>(&model)) return b->space;
  return std::get<TransferModel>(model).base->space;
}

double predict_any(const AnyModel& model, const ApplicationProfile& profile,
                   const Configuration& config) {
  if (const auto* b = std::get_if<BaseModel>(&model)) return predict_base(*b, profile, config);
  return predict_target(std::get<TransferModel>(model), profile, config);
}

nlohmann::json grid_to_json(const HyperGrid& grid) {
  auto forests = json::array(), boosting = json::array();
  for (const auto& c : grid.forests) forests.push_back(forest_candidate_to_json(c));
  for (const auto& c : grid.boosting) boosting.push_back(boosting_candidate_to_json(c));
  return {{"forests", forests}, {"boosting", boosting}};
}

HyperGrid grid_from_json(const nlohmann::json& j) {
  HyperGrid grid;
  try {
    if (!j.is_object()) fail("hyperparameter grid must be a JSON object");
    for (const auto& c : j.at("forests")) grid.forests.push_back(forest_candidate_from_json(c));
    for (const auto& c : j.at("boosting")) grid.boosting.push_back(boosting_candidate_from_json(c));
  } catch (const json::exception& e) {
    fail(std::string("malformed hyperparameter grid: ") + e.what());
  }
  if (grid.forests.empty() || grid.boosting.empty())
    fail("hyperparameter grid must contain at least one forest and one boosting candidate");
  return grid;
}

nlohmann::json model_to_json(const BaseModel& model) {
  json j = base_body(model);
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "base";
  return j;
}

nlohmann::json model_to_json(const TransferModel& model) {
  if (!model.base) fail("transfer model has no base model");
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "transfer";
  j["base"] = base_body(*model.base);
  j["learner"] = learner_to_json(model);
  j["offset"] = model.offset;
  j["chosen_iteration"] = model.chosen_iteration;
  j["few_shot_size"] = model.few_shot_size;
  j["selection_mode"] = std::string(selection_name(model.selection));
  auto report = json::array();
  for (const auto& e : model.selection_report)
    report.push_back({{"iteration", e.iteration},
                      {"learner", std::string(to_string(e.learner))},
                      {"score", e.score}});
  j["selection_report"] = std::move(report);
  j["warnings"] = model.warnings;
  return j;
}

AnyModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) fail("model file lacks format_version");
    const auto version = j.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
      fail("unsupported model format_version " + version.dump() + " (expected " +
           std::to_string(kModelFormatVersion) + ")");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "base") return base_from_body(j);
    if (kind != "transfer") fail("unknown model kind '" + kind + "'");
    TransferModel m;
    m.base = std::make_shared<const BaseModel>(base_from_body(j.at("base")));
    m.learner = learner_from_json(j.at("learner"));
    m.chosen = std::holds_alternative<GaussianProcessModel>(m.learner)
                   ? TransferLearnerKind::GaussianProcess
                   : TransferLearnerKind::TrAdaBoost;
    m.offset = j.at("offset").get<double>();
    m.chosen_iteration = j.at("chosen_iteration").get<std::size_t>();
    m.few_shot_size = j.at("few_shot_size").get<std::size_t>();
    m.selection = j.at("selection_mode").get<std::string>() == "holdout" ? SelectionMode::Holdout
                                                                          : SelectionMode::LoocvOnShots;
    for (const auto& e : j.at("selection_report"))
      m.selection_report.push_back({e.at("iteration").get<std::size_t>(),
                                    parse_transfer_learner(e.at("learner").get<std::string>()),
                                    e.at("score").is_null() ? std::nan("") : e.at("score").get<double>()});
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    const std::size_t expected = m.base->selection.indices.size() + 1;
    if (const auto* gp = std::get_if<GaussianProcessModel>(&m.learner); gp && gp->inputs().cols != expected)
      fail("GP input dimension does not match the base model");
    if (const auto* tb = std::get_if<TrAdaBoostModel>(&m.learner))
      for (const auto& t : tb->learners)
        if (t.n_features != expected) fail("boosting learner dimension does not match the base model");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed model file: ") + e.what());
  }
}

std::string model_to_string(const AnyModel& model) {
  return std::visit([](const auto& m) { return model_to_json(m).dump(); }, model) + "\n";
}

AnyModel model_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("model parse error: ") + e.what());
  }
  return model_from_json(j);
}

void save_model(const AnyModel& model, const std::string& path) {
  write_text_file(path, model_to_string(model));
}

AnyModel load_model(const std::string& path) { return model_from_string(read_text_file(path)); }

}  // namespace leaper
