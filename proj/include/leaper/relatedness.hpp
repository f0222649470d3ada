#pragma once

// Accuracy metrics and source/target relatedness analysis.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaper/domain.hpp"

namespace leaper {

struct PredictionPair {
  double predicted;
  double actual;  // must be non-zero
};

// (1/N) sum |predicted - actual| / |actual|
double mre(std::span<const PredictionPair> pairs);
double mre(std::span<const double> predicted, std::span<const double> actual);

// max(0, 1 - MRE) * 100
double accuracy(std::span<const PredictionPair> pairs);
double accuracy_from_mre(double mre_value);

inline constexpr std::size_t kDefaultJsdBins = 32;

struct HistogramSpec {
  std::size_t bins = kDefaultJsdBins;
  double lo = 0.0;
  double hi = 1.0;

  // Equal-width bins over the union range of both samples.
  static HistogramSpec covering(std::span<const double> a, std::span<const double> b,
                                std::size_t bins = kDefaultJsdBins);
};

// Probability mass per bin; values outside [lo, hi] are clamped into range.
std::vector<double> histogram(std::span<const double> values, const HistogramSpec& spec);

// Jensen-Shannon divergence in bits between two probability vectors.
double jsd_masses(std::span<const double> p, std::span<const double> q);

double jsd(std::span<const double> p_values, std::span<const double> q_values,
           const HistogramSpec& spec);

// Sample Pearson correlation. Throws "undefined correlation" on a constant series.
double pearson(std::span<const double> x, std::span<const double> y);

struct RelatednessReport {
  double jsd = 0.0;
  std::optional<double> pearson;
  std::size_t bins = 0;
  std::size_t shared_configurations = 0;
  std::vector<std::string> warnings;

  // {"jsd": f, "pearson": f|null, "bins": n}
  nlohmann::json to_json() const;
};

RelatednessReport relatedness_report(const Dataset& a, const Dataset& b, Metric metric,
                                     std::size_t bins = kDefaultJsdBins);

}  // namespace leaper
