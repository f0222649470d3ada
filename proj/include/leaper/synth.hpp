#pragma once

// Synthetic accelerator environments with a relatedness knob, plus the
// brute-force split oracle used to check the tree learner.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaper/domain.hpp"
#include "leaper/learners.hpp"

namespace leaper {

ApplicationProfile gen_profile(std::uint64_t seed, std::size_t n_features);

// Multiplicative effect between two (option, level) assignments.
struct Interaction {
  std::size_t option_a = 0;
  std::uint32_t level_a = 0;
  std::size_t option_b = 0;
  std::uint32_t level_b = 0;
  double multiplier = 1.0;

  bool operator==(const Interaction&) const = default;
};

// fraction = logistic(bias + sum_j weights[j] * encoded[j])
struct ResourceLoading {
  double bias = 0.0;
  std::vector<double> weights;

  bool operator==(const ResourceLoading&) const = default;
};

struct SurfaceParams {
  std::uint64_t seed = 0;  // noise stream
  double base_time_ms = 100.0;
  std::vector<std::vector<double>> effects;  // [option][level] multiplier > 0
  std::vector<Interaction> interactions;
  double noise_cv = 0.03;
  std::array<ResourceLoading, 4> resources;  // bram, dsp, ff, lut

  void check(const ConfigurationSpace& space) const;

  double exec_time_ms(const ConfigurationSpace& space, const Configuration& c) const;
  double resource(const ConfigurationSpace& space, const Configuration& c, Metric m) const;

  nlohmann::json to_json() const;
  static SurfaceParams from_json(const nlohmann::json& j);

  bool operator==(const SurfaceParams&) const = default;
};

inline constexpr double kDefaultNoiseCv = 0.03;

// Random surface with pragma-shaped effects: ordinal levels trend
// monotonically with diminishing jitter, binary options toggle a single
// multiplier, categorical labels get independent multipliers.
SurfaceParams random_surface(const ConfigurationSpace& space, std::uint64_t seed,
                             double base_time_ms = 100.0, double noise_cv = kDefaultNoiseCv);

inline constexpr std::uint64_t kEnumerationCap = 100000;

// Labels every configuration (or only `configs`) with exec time and the four
// resource fractions.
Dataset gen_environment(const ConfigurationSpace& space, const ApplicationProfile& profile,
                        const SurfaceParams& params,
                        std::optional<std::span<const Configuration>> configs = std::nullopt,
                        std::string env_id = "synthetic");

struct RelatednessSpec {
  double rho = 1.0;    // 1 = identical up to platform scale
  double gamma = 1.0;  // exponent applied to source log-multipliers
  std::uint64_t seed = 0;

  void check() const;
};

// Target params: log m_t = rho * gamma * log m_s + (1 - rho) * log m_fresh,
// base time scaled by a platform factor drawn from `seed`.
SurfaceParams derive_related_env(const SurfaceParams& source, const ConfigurationSpace& space,
                                 const RelatednessSpec& spec);

// Everything needed to regenerate one environment: the surface and the
// application profile stamped on every sample.
//
// Resolved form: {"surface": {...}, "profile": {"names": [...], "values": [...]}}
// Generator form: {"seed": u, "base_time_ms"?: f, "noise_cv"?: f,
//                  "profile": {"seed"?: u, "n_features"?: n}?}
struct EnvironmentSpec {
  SurfaceParams surface;
  ApplicationProfile profile;

  nlohmann::json to_json() const;
  // Accepts either form; the generator form is expanded against `space`.
  static EnvironmentSpec from_json(const nlohmann::json& j, const ConfigurationSpace& space);
};

inline constexpr std::size_t kDefaultProfileFeatures = 5;

struct SplitResult {
  bool found = false;  // false: no split improves on the parent
  std::size_t feature = 0;
  double threshold = 0.0;
  double sse = 0.0;  // weighted SSE of the two children (parent SSE when !found)
};

// Exhaustive search over every (feature, midpoint) pair with the tree
// learner's tie rule. Intended for small instances (<= 64 rows, <= 8 features).
SplitResult brute_force_best_split(const Matrix& X, std::span<const double> y,
                                   std::span<const double> weights,
                                   std::size_t min_samples_leaf = 1);

}  // namespace leaper
