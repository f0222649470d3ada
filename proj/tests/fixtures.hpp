#pragma once

#include <string>

#include "leaper/base_model.hpp"
#include "leaper/doe.hpp"
#include "leaper/domain.hpp"
#include "leaper/synth.hpp"
#include "support.hpp"

namespace leaper::test {

inline ConfigurationSpace pl_fr_space() {
  return ConfigurationSpace({OptimizationOption::binary("PL"),
                             OptimizationOption::ordinal("FR", {50, 100, 150, 200})});
}

inline ConfigurationSpace shipped_space() {
  return ConfigurationSpace::load(std::string(LEAPER_DATA_DIR) + "/space_full.json");
}

// Labeled LHS sample of a synthetic surface.
inline Dataset synthetic_dataset(const ConfigurationSpace& space, const SurfaceParams& params,
                                 std::size_t n, std::uint64_t plan_seed,
                                 const std::string& env_id = "synthetic") {
  const auto plan = lhs_sample(space, n, plan_seed);
  return gen_environment(space, gen_profile(17, 5), params, plan.configurations, env_id);
}

inline RegressionTree leaf_tree(double value, std::size_t n_features) {
  RegressionTree t;
  t.n_features = n_features;
  RegressionTree::Node node;
  node.value = value;
  node.weight = 1.0;
  node.count = 1;
  t.nodes.push_back(node);
  return t;
}

// Hand-built model over PL x FR whose forest outputs `rf` and boosting `gb`.
inline BaseModel constant_base(Metric metric, double rf, double gb) {
  BaseModel m;
  m.metric = metric;
  m.space = pl_fr_space();
  m.normalizer = {{0.0, 50.0}, {1.0, 200.0}};
  m.selection = {{0, 1}, 2, false};
  m.forest.trees.push_back(leaf_tree(rf, 2));
  m.gbm.init_value = gb;
  return m;
}

// One forest and one boosting candidate, small enough for quick tests.
inline HyperGrid small_grid() {
  ForestCandidate forest;
  forest.n_trees = 30;
  BoostingCandidate boosting;
  boosting.n_stages = 60;
  return HyperGrid::single(forest, boosting);
}

inline TrainOptions quick_options(std::uint64_t seed = 0) {
  TrainOptions o;
  o.grid = small_grid();
  o.folds = 3;
  o.seed = seed;
  return o;
}

}  // namespace leaper::test
