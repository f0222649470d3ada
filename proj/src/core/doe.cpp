#include "leaper/doe.hpp"

#include <numeric>
#include <set>

#include "leaper/error.hpp"
#include "leaper/rng.hpp"

namespace leaper {

namespace {

constexpr int kRepairPasses = 100;

// Indices of rows equal to an earlier row.
std::vector<std::size_t> duplicate_rows(const std::vector<Configuration>& rows) {
  std::set<Configuration> seen;
  std::vector<std::size_t> dups;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!seen.insert(rows[i]).second) dups.push_back(i);
  return dups;
}

void fill_unused(const ConfigurationSpace& space, std::vector<Configuration>& rows,
                 const std::vector<std::size_t>& dups, Rng& rng) {
  std::set<std::uint64_t> used;
  for (const auto& r : rows) used.insert(space.index_of(r));
  const std::uint64_t card = space.cardinality();
  for (std::size_t row : dups) {
    std::uint64_t pick;
    if (card - used.size() < card / 2) {
      // Dense: walk from a random start to the next unused index.
      pick = rng.below(static_cast<std::size_t>(card));
      while (used.count(pick)) pick = (pick + 1) % card;
    } else {
      do {
        pick = (static_cast<std::uint64_t>(rng.next()) % card);
      } while (used.count(pick));
    }
    used.insert(pick);
    rows[row] = space.configuration_at(pick);
  }
}

}  // namespace

DoePlan lhs_sample(const ConfigurationSpace& space, std::size_t n, std::uint64_t seed) {
  if (n < 1) fail("n must be ≥ 1");
  if (n > space.cardinality()) {
    fail("space exhausted: requested " + std::to_string(n) + " configurations but the space has " +
         std::to_string(space.cardinality()));
  }

  Rng rng(seed);
  const auto& options = space.options();
  std::vector<Configuration> rows(n, Configuration{std::vector<std::uint32_t>(options.size())});

  std::vector<std::size_t> strata(n);
  for (std::size_t j = 0; j < options.size(); ++j) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(strata));
    const double levels = static_cast<double>(options[j].level_count());
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(strata[i]) + 0.5) / static_cast<double>(n);
      auto level = static_cast<std::uint32_t>(u * levels);
      if (level >= options[j].level_count()) level = static_cast<std::uint32_t>(levels) - 1;
      rows[i].levels[j] = level;
    }
  }

  auto dups = duplicate_rows(rows);
  for (int pass = 0; pass < kRepairPasses && !dups.empty() && !options.empty() && n > 1; ++pass) {
    for (std::size_t row : dups) {
      const std::size_t j = rng.below(options.size());
      std::size_t other = rng.below(n - 1);
      if (other >= row) ++other;
      std::swap(rows[row].levels[j], rows[other].levels[j]);
    }
    dups = duplicate_rows(rows);
  }
  if (!dups.empty()) fill_unused(space, rows, dups, rng);

  return DoePlan{space, std::move(rows), seed};
}

std::vector<std::vector<std::size_t>> stratification_report(const DoePlan& plan) {
  const auto& options = plan.space.options();
  std::vector<std::vector<std::size_t>> hist(options.size());
  for (std::size_t j = 0; j < options.size(); ++j) hist[j].assign(options[j].level_count(), 0);
  for (const auto& c : plan.configurations)
    for (std::size_t j = 0; j < options.size() && j < c.levels.size(); ++j)
      if (c.levels[j] < hist[j].size()) ++hist[j][c.levels[j]];
  return hist;
}

nlohmann::json DoePlan::to_json() const {
  auto rows = nlohmann::json::array();
  for (const auto& c : configurations) rows.push_back(c.levels);
  return nlohmann::json{{"seed", seed}, {"configurations", std::move(rows)}};
}

DoePlan DoePlan::from_json(const nlohmann::json& j, const ConfigurationSpace& space) {
  if (!j.is_object() || !j.contains("configurations") || !j["configurations"].is_array())
    fail("plan JSON must contain a 'configurations' array");
  DoePlan plan{space, {}, j.value("seed", std::uint64_t{0})};
  for (const auto& row : j["configurations"]) {
    Configuration c;
    try {
      c.levels = row.get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception&) {
      fail("plan configuration rows must be arrays of level indices");
    }
    if (auto problem = space.check_configuration(c); !problem.empty())
      fail("plan row " + std::to_string(plan.configurations.size()) + ": " + problem);
    plan.configurations.push_back(std::move(c));
  }
  return plan;
}

}  // namespace leaper
