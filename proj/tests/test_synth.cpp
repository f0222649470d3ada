#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "leaper/error.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/rng.hpp"
#include "leaper/store.hpp"

using namespace leaper;

namespace {

SurfaceParams flat_surface(const ConfigurationSpace& space) {
  auto p = random_surface(space, 1, 80.0, 0.0);
  for (auto& e : p.effects) std::fill(e.begin(), e.end(), 1.0);
  p.interactions.clear();
  return p;
}

std::vector<double> times(const Dataset& d) {
  std::vector<double> out;
  for (const auto& s : d.samples) out.push_back(*s.response(Metric::ExecTimeMs));
  return out;
}

}  // namespace

TEST(Profile, DeterministicAndNamed) {
  const auto a = gen_profile(3, 5), b = gen_profile(3, 5);
  EXPECT_EQ(a.names, b.names);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.names, (std::vector<std::string>{"mix_0", "mix_1", "ilp", "regtraffic", "footprint"}));
  EXPECT_NE(gen_profile(4, 5).values, a.values);
}

TEST(Profile, MixSumsToOne) {
  for (std::size_t n : {1u, 2u, 5u, 8u, 12u}) {
    const auto p = gen_profile(n, n);
    EXPECT_EQ(p.names.size(), n);
    double mix = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (p.names[i].rfind("mix_", 0) == 0) mix += p.values[i];
    EXPECT_NEAR(mix, 1.0, 1e-9) << n;
    EXPECT_TRUE(p.problems().empty()) << n;
  }
  EXPECT_THROW(gen_profile(1, 0), Error);
}

TEST(Environment, FlatSurfaceIsBaseTime) {
  const auto space = test::shipped_space();
  const auto d = gen_environment(space, gen_profile(1, 3), flat_surface(space));
  EXPECT_EQ(d.samples.size(), space.cardinality());
  for (const auto& s : d.samples) EXPECT_EQ(*s.response(Metric::ExecTimeMs), 80.0);
}

TEST(Environment, PipelineHalvesTime) {
  const auto space = test::shipped_space();
  auto p = flat_surface(space);
  p.effects[0][1] = 0.5;
  const auto d = gen_environment(space, gen_profile(1, 3), p);
  for (const auto& s : d.samples) {
    if (s.configuration.levels[0] != 1) continue;
    auto twin = s.configuration;
    twin.levels[0] = 0;
    EXPECT_EQ(*s.response(Metric::ExecTimeMs), 0.5 * p.exec_time_ms(space, twin));
  }
}

TEST(Environment, ResponsesAreValid) {
  const auto space = test::shipped_space();
  const auto d = gen_environment(space, gen_profile(2, 5), random_surface(space, 2));
  EXPECT_TRUE(validate_dataset(d).empty());
}

TEST(Environment, DeterministicPerConfiguration) {
  const auto space = test::shipped_space();
  const auto params = random_surface(space, 3);
  const auto plan = lhs_sample(space, 30, 3).configurations;
  const auto full = gen_environment(space, gen_profile(2, 5), params);
  const auto part = gen_environment(space, gen_profile(2, 5), params, plan);
  for (std::size_t i = 0; i < plan.size(); ++i)
    EXPECT_EQ(part.samples[i].responses, full.samples[space.index_of(plan[i])].responses);
}

TEST(Environment, CardinalityCap) {
  std::vector<OptimizationOption> opts;
  for (int i = 0; i < 17; ++i) opts.push_back(OptimizationOption::binary("B" + std::to_string(i)));
  const ConfigurationSpace space(opts);
  const auto params = random_surface(space, 1);
  EXPECT_THROW(gen_environment(space, gen_profile(1, 3), params), Error);
  const std::vector<Configuration> one{space.configuration_at(5)};
  EXPECT_EQ(gen_environment(space, gen_profile(1, 3), params, one).samples.size(), 1u);
}

TEST(Environment, GoldenShippedParams) {
  const auto space = test::shipped_space();
  const auto env = EnvironmentSpec::from_json(
      nlohmann::json::parse(test::slurp(std::string(LEAPER_DATA_DIR) + "/params_source.json")),
      space);
  const auto plan = lhs_sample(space, 50, 7).configurations;
  const auto text = dataset_to_csv(gen_environment(space, env.profile, env.surface, plan, "source"));
  const auto path = test::golden_path("synth_source_n50_seed7.csv");
  if (test::update_golden()) {
    std::ofstream(path, std::ios::binary) << text;
    GTEST_SKIP() << "golden regenerated";
  }
  EXPECT_EQ(text, test::slurp(path));
}

TEST(Related, IdenticalUpToScale) {
  const auto space = test::shipped_space();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto source = random_surface(space, seed, 100.0, 0.0);
    const auto target = derive_related_env(source, space, {1.0, 1.0, seed + 50});
    const auto profile = gen_profile(1, 5);
    const auto a = times(gen_environment(space, profile, source));
    const auto b = times(gen_environment(space, profile, target));
    const double scale = b[0] / a[0];
    EXPECT_GT(scale, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], scale * a[i], 1e-12 * b[i]);
    EXPECT_NEAR(pearson(a, b), 1.0, 1e-9);
  }
}

TEST(Related, ZeroRhoIgnoresSource) {
  const auto space = test::shipped_space();
  const auto s1 = random_surface(space, 1), s2 = random_surface(space, 2);
  const auto t1 = derive_related_env(s1, space, {0.0, 1.0, 9});
  const auto t2 = derive_related_env(s2, space, {0.0, 1.0, 9});
  EXPECT_EQ(t1.effects, t2.effects);
}

TEST(Related, PearsonGrowsWithRho) {
  const auto space = test::shipped_space();
  const auto plan = lhs_sample(space, 200, 1).configurations;
  const auto profile = gen_profile(1, 5);
  std::vector<double> mean_r;
  for (int step = 0; step < 10; ++step) {
    const double rho = 0.5 + 0.05 * step;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto source = random_surface(space, seed);
      const auto target = derive_related_env(source, space, {rho, 1.0, seed + 100});
      total += pearson(times(gen_environment(space, profile, source, plan)),
                       times(gen_environment(space, profile, target, plan)));
    }
    mean_r.push_back(total / 10.0);
  }
  for (std::size_t k = 1; k < mean_r.size(); ++k) EXPECT_GE(mean_r[k], mean_r[k - 1]) << k;
}

TEST(Related, Deterministic) {
  const auto space = test::shipped_space();
  const auto source = random_surface(space, 4);
  EXPECT_EQ(derive_related_env(source, space, {0.7, 1.2, 3}),
            derive_related_env(source, space, {0.7, 1.2, 3}));
  EXPECT_THROW(derive_related_env(source, space, {1.2, 1.0, 3}), Error);
  EXPECT_THROW(derive_related_env(source, space, {0.5, 0.0, 3}), Error);
}

TEST(EnvSpec, GeneratorFormResolves) {
  const auto space = test::shipped_space();
  const auto gen = EnvironmentSpec::from_json(
      nlohmann::json::parse(R"({"seed": 5, "noise_cv": 0.0, "profile": {"n_features": 7}})"), space);
  EXPECT_EQ(gen.surface, random_surface(space, 5, 100.0, 0.0));
  EXPECT_EQ(gen.profile.names.size(), 7u);
  const auto resolved = EnvironmentSpec::from_json(gen.to_json(), space);
  EXPECT_EQ(resolved.surface, gen.surface);
  EXPECT_EQ(resolved.profile.values, gen.profile.values);
  EXPECT_THROW(EnvironmentSpec::from_json(nlohmann::json::parse(R"({"noise_cv": 0.1})"), space),
               Error);
  EXPECT_THROW(EnvironmentSpec::from_json(nlohmann::json::parse(R"({"seed": 1, "noise_cv": 1.5})"),
                                          space),
               Error);
}

TEST(Surface, JsonRoundTripAndChecks) {
  const auto space = test::shipped_space();
  const auto p = random_surface(space, 6);
  EXPECT_EQ(SurfaceParams::from_json(nlohmann::json::parse(p.to_json().dump())), p);
  auto bad = p;
  bad.effects[2][1] = -1.0;
  EXPECT_THROW(bad.check(space), Error);
  EXPECT_THROW(p.check(test::pl_fr_space()), Error);
}

TEST(BruteForce, Examples) {
  const auto r = brute_force_best_split(Matrix::from_rows({{0}, {1}}), std::vector{0.0, 10.0}, {});
  EXPECT_TRUE(r.found);
  EXPECT_EQ(r.feature, 0u);
  EXPECT_EQ(r.threshold, 0.5);
  EXPECT_EQ(r.sse, 0.0);
  EXPECT_FALSE(brute_force_best_split(Matrix::from_rows({{0}, {1}, {2}}), std::vector{4.0, 4.0, 4.0}, {})
                   .found);
}

TEST(BruteForce, AgreesWithTreeRoot) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 7000);
    Matrix X(20, 4);
    std::vector<double> y(20), w(20);
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 4; ++j) X(i, j) = std::round(rng.uniform(0, 6));
      y[i] = X(i, 1) * X(i, 2) + rng.normal();
      w[i] = rng.uniform(0.5, 1.5);
    }
    const auto oracle = brute_force_best_split(X, y, w);
    const auto tree = fit_regression_tree(X, y, w, {1, 1, std::nullopt}, seed);
    ASSERT_TRUE(oracle.found);
    const auto& root = tree.nodes[0];
    EXPECT_EQ(static_cast<std::size_t>(root.feature), oracle.feature) << seed;
    EXPECT_EQ(root.threshold, oracle.threshold) << seed;
    EXPECT_NEAR(tree.nodes[root.left].sse + tree.nodes[root.right].sse, oracle.sse, 1e-12) << seed;
  }
}
