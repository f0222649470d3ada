#pragma once

// Latin-hypercube design of experiments over a discrete configuration space.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "leaper/domain.hpp"

namespace leaper {

inline constexpr std::size_t kDefaultDoeSize = 50;

struct DoePlan {
  ConfigurationSpace space;
  std::vector<Configuration> configurations;
  std::uint64_t seed = 0;

  // {"seed": u, "configurations": [[level_idx, ...], ...]}
  nlohmann::json to_json() const;
  static DoePlan from_json(const nlohmann::json& j, const ConfigurationSpace& space);
};

// Each option's n draws sit at the midpoints of n equal strata of [0, 1) and
// are quantized proportionally onto its levels; the stratum order per option
// is an independent seeded permutation. Duplicate rows are repaired by
// swapping column entries between rows (marginals preserved), then, if that
// fails, replaced by unused configurations.
DoePlan lhs_sample(const ConfigurationSpace& space, std::size_t n, std::uint64_t seed);

// histogram[option][level] = number of plan rows using that level.
std::vector<std::vector<std::size_t>> stratification_report(const DoePlan& plan);

}  // namespace leaper
