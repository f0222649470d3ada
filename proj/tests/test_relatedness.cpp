#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "leaper/error.hpp"
#include "leaper/relatedness.hpp"
#include "leaper/rng.hpp"

using namespace leaper;

namespace {

std::vector<double> random_values(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = std::exp(rng.normal());
  return v;
}

}  // namespace

TEST(Mre, Examples) {
  EXPECT_EQ(mre(std::vector{1.0, 2.0}, std::vector{1.0, 2.0}), 0.0);
  EXPECT_EQ(mre(std::vector<PredictionPair>{{3.0, 2.0}}), 0.5);
  EXPECT_EQ(mre(std::vector<PredictionPair>{{2.0, 1.0}, {4.0, 8.0}}), 0.75);
  EXPECT_EQ(mre(std::vector<PredictionPair>{{-1.0, -2.0}}), 0.5);
}

TEST(Mre, Errors) {
  try {
    mre(std::vector<PredictionPair>{{1.0, 1.0}, {1.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_THROW(mre(std::vector<PredictionPair>{}), Error);
  EXPECT_THROW(mre(std::vector{1.0}, std::vector{1.0, 2.0}), Error);
}

TEST(Accuracy, Examples) {
  EXPECT_DOUBLE_EQ(accuracy_from_mre(0.15), 85.0);
  EXPECT_EQ(accuracy(std::vector<PredictionPair>{{5.0, 5.0}}), 100.0);
  EXPECT_EQ(accuracy_from_mre(1.4), 0.0);
}

TEST(Jsd, IdenticalIsZero) {
  const auto v = random_values(1, 50);
  EXPECT_EQ(jsd(v, v, HistogramSpec::covering(v, v)), 0.0);
}

TEST(Jsd, DisjointSupportIsOne) {
  const HistogramSpec spec{2, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(jsd(std::vector{0.1, 0.2}, std::vector{0.8, 0.9}, spec), 1.0);
}

TEST(Jsd, HandComputedMasses) {
  const double expected = 0.5 * std::log2(4.0 / 3.0) +
                          0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25));
  EXPECT_NEAR(jsd_masses(std::vector{1.0, 0.0}, std::vector{0.5, 0.5}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.3113, 1e-4);
}

TEST(Jsd, SymmetricAndBounded) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto p = random_values(seed, 40), q = random_values(seed + 100, 25);
    for (std::size_t bins : {2u, 7u, 32u}) {
      const auto spec = HistogramSpec::covering(p, q, bins);
      const double d = jsd(p, q, spec);
      EXPECT_EQ(d, jsd(q, p, spec));
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
  }
}

TEST(Jsd, Errors) {
  const HistogramSpec spec{4, 0.0, 1.0};
  EXPECT_THROW(jsd(std::vector<double>{}, std::vector{0.5}, spec), Error);
  EXPECT_THROW(jsd(std::vector{0.5}, std::vector{0.5}, HistogramSpec{1, 0.0, 1.0}), Error);
  EXPECT_THROW(jsd(std::vector{0.5}, std::vector{0.5}, HistogramSpec{4, 1.0, 1.0}), Error);
}

TEST(Histogram, ClampsAndNormalizes) {
  const HistogramSpec spec{4, 0.0, 4.0};
  EXPECT_EQ(histogram(std::vector{-3.0, 0.5, 1.5, 3.99, 4.0, 9.0}, spec),
            (std::vector<double>{2.0 / 6, 1.0 / 6, 0.0, 3.0 / 6}));
}

TEST(Histogram, CoveringUsesUnionRange) {
  const auto spec = HistogramSpec::covering(std::vector{2.0, 3.0}, std::vector{1.0, 5.0}, 8);
  EXPECT_EQ(spec.lo, 1.0);
  EXPECT_EQ(spec.hi, 5.0);
  EXPECT_EQ(spec.bins, 8u);
}

TEST(Pearson, Examples) {
  EXPECT_DOUBLE_EQ(pearson(std::vector{1.0, 2.0, 3.0}, std::vector{1.0, 2.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(pearson(std::vector{1.0, 2.0, 3.0}, std::vector{-1.0, -2.0, -3.0}), -1.0);
  EXPECT_EQ(pearson(std::vector{-1.0, 0.0, 1.0}, std::vector{1.0, 0.0, 1.0}), 0.0);
}

TEST(Pearson, AffineInvariance) {
  const auto x = random_values(3, 30), y = random_values(4, 30);
  const double r = pearson(x, y);
  std::vector<double> x2, y2, neg;
  for (double v : x) x2.push_back(3.5 * v + 12.0);
  for (double v : y) y2.push_back(0.01 * v - 4.0);
  for (double v : y) neg.push_back(-v);
  EXPECT_NEAR(pearson(x2, y2), r, 1e-12);
  EXPECT_NEAR(pearson(x, neg), -r, 1e-12);
}

TEST(Pearson, Errors) {
  try {
    pearson(std::vector{1.0, 1.0, 1.0}, std::vector{1.0, 2.0, 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "undefined correlation");
  }
  EXPECT_THROW(pearson(std::vector{1.0}, std::vector{1.0}), Error);
  EXPECT_THROW(pearson(std::vector{1.0, 2.0}, std::vector{1.0, 2.0, 3.0}), Error);
}

TEST(Report, SelfComparison) {
  const auto space = test::shipped_space();
  const auto d = test::synthetic_dataset(space, random_surface(space, 1), 40, 1);
  const auto r = relatedness_report(d, d, Metric::ExecTimeMs);
  EXPECT_EQ(r.jsd, 0.0);
  ASSERT_TRUE(r.pearson);
  EXPECT_DOUBLE_EQ(*r.pearson, 1.0);
  EXPECT_EQ(r.shared_configurations, 40u);
  EXPECT_EQ(r.to_json().dump(), R"({"bins":32,"jsd":0.0,"pearson":1.0})");
}

TEST(Report, ScaledResponses) {
  const auto space = test::shipped_space();
  const auto a = test::synthetic_dataset(space, random_surface(space, 2), 40, 2);
  auto b = a;
  for (auto& s : b.samples) s.responses[Metric::ExecTimeMs] *= 2.0;
  // Reordering must not matter: pairs are matched by configuration.
  std::reverse(b.samples.begin(), b.samples.end());
  const auto r = relatedness_report(a, b, Metric::ExecTimeMs);
  ASSERT_TRUE(r.pearson);
  EXPECT_NEAR(*r.pearson, 1.0, 1e-12);
  EXPECT_GT(r.jsd, 0.0);
}

TEST(Report, NoSharedConfigurationsGivesPartialReport) {
  const auto space = test::pl_fr_space();
  const auto params = random_surface(space, 3);
  const auto all = space.enumerate();
  const std::vector<Configuration> first(all.begin(), all.begin() + 4), rest(all.begin() + 4, all.end());
  const auto profile = gen_profile(1, 2);
  const auto a = gen_environment(space, profile, params, first);
  const auto b = gen_environment(space, profile, params, rest);
  const auto r = relatedness_report(a, b, Metric::ExecTimeMs, 8);
  EXPECT_FALSE(r.pearson);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.to_json()["pearson"], nullptr);
  EXPECT_EQ(r.to_json()["bins"], 8);
}

TEST(Report, MissingMetricIsAnError) {
  const auto space = test::shipped_space();
  auto d = test::synthetic_dataset(space, random_surface(space, 4), 10, 4);
  auto e = d;
  e.samples[3].responses.erase(Metric::ExecTimeMs);
  EXPECT_THROW(relatedness_report(d, e, Metric::ExecTimeMs), Error);
}

TEST(Report, GoldenRelatedPair) {
  const auto space = test::shipped_space();
  const auto source = random_surface(space, 2024);
  const auto target = derive_related_env(source, space, {0.9, 1.0, 7});
  const auto plan = lhs_sample(space, 50, 5).configurations;
  const auto profile = gen_profile(17, 5);
  const auto a = gen_environment(space, profile, source, plan, "source");
  const auto b = gen_environment(space, profile, target, plan, "target");
  const auto r = relatedness_report(a, b, Metric::ExecTimeMs);
  ASSERT_TRUE(r.pearson);
  EXPECT_GT(*r.pearson, 0.5);

  const auto text = r.to_json().dump(2) + "\n";
  const auto path = test::golden_path("relatedness_rho09.json");
  if (test::update_golden()) {
    std::ofstream(path, std::ios::binary) << text;
    GTEST_SKIP() << "golden regenerated";
  }
  EXPECT_EQ(text, test::slurp(path));
}
