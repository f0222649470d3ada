#include "leaper/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "leaper/error.hpp"

namespace leaper {

double mre(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) fail("mean relative error needs at least one pair");
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].actual == 0.0)
      fail("actual value at index " + std::to_string(i) + " is zero; relative error undefined");
    sum += std::abs(pairs[i].predicted - pairs[i].actual) / std::abs(pairs[i].actual);
  }
  return sum / static_cast<double>(pairs.size());
}

double mre(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) fail("prediction and actual lengths differ");
  std::vector<PredictionPair> pairs(predicted.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {predicted[i], actual[i]};
  return mre(pairs);
}

double accuracy_from_mre(double mre_value) { return std::max(0.0, 1.0 - mre_value) * 100.0; }

double accuracy(std::span<const PredictionPair> pairs) { return accuracy_from_mre(mre(pairs)); }

HistogramSpec HistogramSpec::covering(std::span<const double> a, std::span<const double> b,
                                      std::size_t bins) {
  if (a.empty() || b.empty()) fail("histogram inputs must be non-empty");
  auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  HistogramSpec spec;
  spec.bins = bins;
  spec.lo = std::min(*amin, *bmin);
  spec.hi = std::max(*amax, *bmax);
  if (!(spec.hi > spec.lo)) spec.hi = spec.lo + 1.0;  // all values equal
  return spec;
}

std::vector<double> histogram(std::span<const double> values, const HistogramSpec& spec) {
  if (spec.bins < 2) fail("histogram needs at least 2 bins");
  if (!(spec.lo < spec.hi)) fail("histogram range must satisfy lo < hi");
  if (values.empty()) fail("histogram input must be non-empty");
  std::vector<double> counts(spec.bins, 0.0);
  const double width = spec.hi - spec.lo;
  for (double v : values) {
    double t = (std::clamp(v, spec.lo, spec.hi) - spec.lo) / width;
    auto bin = static_cast<std::size_t>(t * static_cast<double>(spec.bins));
    counts[std::min(bin, spec.bins - 1)] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(values.size());
  return counts;
}

namespace {

double kl_to_mixture(std::span<const double> p, std::span<const double> m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) sum += p[i] * std::log2(p[i] / m[i]);
  return sum;
}

}  // namespace

double jsd_masses(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || p.size() != q.size()) fail("distributions must be non-empty and equal length");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double d = 0.5 * kl_to_mixture(p, m) + 0.5 * kl_to_mixture(q, m);
  return std::clamp(d, 0.0, 1.0);
}

double jsd(std::span<const double> p_values, std::span<const double> q_values,
           const HistogramSpec& spec) {
  if (p_values.empty() || q_values.empty()) fail("jsd inputs must be non-empty");
  return jsd_masses(histogram(p_values, spec), histogram(q_values, spec));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail("pearson series must have equal length");
  if (x.size() < 2) fail("pearson needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail("undefined correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json RelatednessReport::to_json() const {
  nlohmann::json j;
  j["jsd"] = jsd;
  j["pearson"] = pearson ? nlohmann::json(*pearson) : nlohmann::json(nullptr);
  j["bins"] = bins;
  return j;
}

RelatednessReport relatedness_report(const Dataset& a, const Dataset& b, Metric metric,
                                     std::size_t bins) {
  auto responses = [metric](const Dataset& d, const char* which) {
    std::vector<double> out;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      if (auto v = d.samples[i].response(metric))
        out.push_back(*v);
      else
        missing.push_back(i);
    }
    if (!missing.empty())
      fail(std::string("dataset ") + which + " lacks metric " + std::string(metric_name(metric)) +
           " at sample " + std::to_string(missing.front()));
    if (out.empty()) fail(std::string("dataset ") + which + " is empty");
    return out;
  };
  const auto va = responses(a, "a");
  const auto vb = responses(b, "b");

  RelatednessReport report;
  report.bins = bins;
  report.jsd = jsd(va, vb, HistogramSpec::covering(va, vb, bins));

  if (!(a.space == b.space)) {
    report.warnings.push_back("configuration spaces differ; pearson omitted");
    return report;
  }
  std::map<Configuration, double> by_config;
  for (const auto& s : a.samples) by_config.emplace(s.configuration, *s.response(metric));
  std::vector<double> xs, ys;
  for (const auto& s : b.samples) {
    auto it = by_config.find(s.configuration);
    if (it == by_config.end()) continue;
    xs.push_back(it->second);
    ys.push_back(*s.response(metric));
    by_config.erase(it);  // pair each configuration once
  }
  report.shared_configurations = xs.size();
  if (xs.size() < 2) {
    report.warnings.push_back("fewer than two shared configurations; pearson omitted");
    return report;
  }
  try {
    report.pearson = pearson(xs, ys);
  } catch (const Error& e) {
    report.warnings.push_back(e.what());
  }
  return report;
}

}  // namespace leaper
