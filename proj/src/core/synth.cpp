#include "leaper/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leaper/error.hpp"
#include "leaper/rng.hpp"

namespace leaper {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::size_t resource_slot(Metric m) {
  switch (m) {
    case Metric::BramFrac: return 0;
    case Metric::DspFrac: return 1;
    case Metric::FfFrac: return 2;
    case Metric::LutFrac: return 3;
    case Metric::ExecTimeMs: break;
  }
  fail("execution time is not a resource metric");
}

// Largest absolute value each encoded component takes over the space.
std::vector<double> encoded_scales(const ConfigurationSpace& space) {
  std::vector<double> scales;
  for (const auto& o : space.options()) {
    if (o.kind == OptionKind::Ordinal) {
      double m = 0.0;
      for (double v : o.numeric_levels) m = std::max(m, std::abs(v));
      scales.push_back(m > 0.0 ? m : 1.0);
    } else {
      for (std::size_t k = 0; k < o.encoded_width(); ++k) scales.push_back(1.0);
    }
  }
  return scales;
}

}  // namespace

ApplicationProfile gen_profile(std::uint64_t seed, std::size_t n_features) {
  if (n_features < 1) fail("n_features must be ≥ 1");
  Rng rng(seed);
  ApplicationProfile p;

  std::size_t n_mix, n_reuse = 0;
  bool tail = n_features >= 4;
  if (tail) {
    const std::size_t rest = n_features - 3;
    n_mix = std::min(rest, std::max<std::size_t>(2, (rest + 1) / 2));
    n_reuse = rest - n_mix;
  } else {
    n_mix = 1;
  }

  std::vector<double> mix(n_mix);
  for (auto& m : mix) m = -std::log(1.0 - rng.uniform());  // Dirichlet(1, ..., 1)
  const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
  for (std::size_t i = 0; i < n_mix; ++i) {
    p.names.push_back("mix_" + std::to_string(i));
    p.values.push_back(n_mix == 1 ? 1.0 : mix[i] / total);
  }
  if (n_features >= 2) {
    p.names.push_back("ilp");
    p.values.push_back(1.0 + 7.0 * rng.uniform());
  }
  std::vector<double> reuse(n_reuse);
  for (auto& r : reuse) r = rng.uniform();
  std::sort(reuse.begin(), reuse.end());  // CDF points are non-decreasing
  for (std::size_t i = 0; i < n_reuse; ++i) {
    p.names.push_back("reuse_" + std::to_string(i));
    p.values.push_back(reuse[i]);
  }
  if (n_features >= 3) {
    p.names.push_back("regtraffic");
    p.values.push_back(std::exp(3.0 + rng.normal()));
  }
  if (tail) {
    p.names.push_back("footprint");
    p.values.push_back(std::round(std::exp(rng.uniform(std::log(1e4), std::log(1e8)))));
  }
  return p;
}

void SurfaceParams::check(const ConfigurationSpace& space) const {
  if (!(base_time_ms > 0.0) || !std::isfinite(base_time_ms)) fail("base_time_ms must be > 0");
  if (!(noise_cv >= 0.0 && noise_cv < 1.0)) fail("noise_cv must lie in [0, 1)");
  const auto& opts = space.options();
  if (effects.size() != opts.size()) fail("surface effects do not match the space's option count");
  for (std::size_t j = 0; j < opts.size(); ++j) {
    if (effects[j].size() != opts[j].level_count())
      fail("surface effects for option '" + opts[j].name + "' do not match its level count");
    for (double m : effects[j])
      if (!(m > 0.0) || !std::isfinite(m))
        fail("effect multipliers for option '" + opts[j].name + "' must be positive");
  }
  for (const auto& it : interactions) {
    if (it.option_a >= opts.size() || it.option_b >= opts.size() ||
        it.level_a >= opts[it.option_a].level_count() ||
        it.level_b >= opts[it.option_b].level_count())
      fail("interaction refers to an option or level outside the space");
    if (!(it.multiplier > 0.0)) fail("interaction multipliers must be positive");
  }
  for (const auto& r : resources)
    if (r.weights.size() != space.encoded_width())
      fail("resource loading width does not match the encoded configuration width");
}

double SurfaceParams::exec_time_ms(const ConfigurationSpace& space, const Configuration& c) const {
  double t = base_time_ms;
  for (std::size_t j = 0; j < effects.size(); ++j) t *= effects[j][c.levels[j]];
  for (const auto& it : interactions)
    if (c.levels[it.option_a] == it.level_a && c.levels[it.option_b] == it.level_b)
      t *= it.multiplier;
  if (noise_cv > 0.0) {
    const double sigma2 = std::log1p(noise_cv * noise_cv);
    Rng rng(derive_seed(seed, space.index_of(c)));
    t *= std::exp(std::sqrt(sigma2) * rng.normal() - 0.5 * sigma2);
  }
  return t;
}

double SurfaceParams::resource(const ConfigurationSpace& space, const Configuration& c,
                               Metric m) const {
  const auto& load = resources[resource_slot(m)];
  const auto x = space.encode(c);
  double z = load.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += load.weights[j] * x[j];
  return logistic(z);
}

nlohmann::json SurfaceParams::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["base_time_ms"] = base_time_ms;
  j["noise_cv"] = noise_cv;
  j["effects"] = effects;
  auto inter = nlohmann::json::array();
  for (const auto& it : interactions)
    inter.push_back({{"option_a", it.option_a}, {"level_a", it.level_a},
                     {"option_b", it.option_b}, {"level_b", it.level_b},
                     {"multiplier", it.multiplier}});
  j["interactions"] = std::move(inter);
  auto res = nlohmann::json::object();
  const Metric order[] = {Metric::BramFrac, Metric::DspFrac, Metric::FfFrac, Metric::LutFrac};
  for (std::size_t k = 0; k < 4; ++k)
    res[std::string(metric_column(order[k]))] = {{"bias", resources[k].bias},
                                                 {"weights", resources[k].weights}};
  j["resources"] = std::move(res);
  return j;
}

SurfaceParams SurfaceParams::from_json(const nlohmann::json& j) {
  SurfaceParams p;
  try {
    p.seed = j.at("seed").get<std::uint64_t>();
    p.base_time_ms = j.at("base_time_ms").get<double>();
    p.noise_cv = j.at("noise_cv").get<double>();
    p.effects = j.at("effects").get<std::vector<std::vector<double>>>();
    for (const auto& it : j.at("interactions"))
      p.interactions.push_back({it.at("option_a").get<std::size_t>(),
                                it.at("level_a").get<std::uint32_t>(),
                                it.at("option_b").get<std::size_t>(),
                                it.at("level_b").get<std::uint32_t>(),
                                it.at("multiplier").get<double>()});
    const Metric order[] = {Metric::BramFrac, Metric::DspFrac, Metric::FfFrac, Metric::LutFrac};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& r = j.at("resources").at(std::string(metric_column(order[k])));
      p.resources[k].bias = r.at("bias").get<double>();
      p.resources[k].weights = r.at("weights").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed surface parameters: ") + e.what());
  }
  return p;
}

SurfaceParams random_surface(const ConfigurationSpace& space, std::uint64_t seed,
                             double base_time_ms, double noise_cv) {
  Rng rng(seed);
  SurfaceParams p;
  p.seed = derive_seed(seed, 0x5eed);
  p.base_time_ms = base_time_ms;
  p.noise_cv = noise_cv;

  const auto& opts = space.options();
  for (const auto& o : opts) {
    const std::size_t L = o.level_count();
    std::vector<double> m(L, 1.0);
    switch (o.kind) {
      case OptionKind::Binary:
        m[1] = std::exp(-0.2 + 0.35 * rng.normal());
        break;
      case OptionKind::Ordinal: {
        // Total log change across the range, saturating toward the top levels.
        const double span = -0.8 + 0.4 * rng.normal();
        for (std::size_t k = 1; k < L; ++k) {
          const double t = static_cast<double>(k) / static_cast<double>(L - 1);
          const double shape = (1.0 - std::exp(-3.0 * t)) / (1.0 - std::exp(-3.0));
          m[k] = std::exp(span * shape + 0.05 * rng.normal());
        }
        break;
      }
      case OptionKind::Categorical:
        for (auto& v : m) v = std::exp(0.3 * rng.normal());
        break;
    }
    p.effects.push_back(std::move(m));
  }

  if (opts.size() >= 2) {
    const std::size_t n_inter = std::min<std::size_t>(3, opts.size() * (opts.size() - 1) / 2);
    for (std::size_t k = 0; k < n_inter; ++k) {
      Interaction it;
      it.option_a = rng.below(opts.size());
      it.option_b = rng.below(opts.size() - 1);
      if (it.option_b >= it.option_a) ++it.option_b;
      if (it.option_a > it.option_b) std::swap(it.option_a, it.option_b);
      it.level_a = static_cast<std::uint32_t>(rng.below(opts[it.option_a].level_count()));
      it.level_b = static_cast<std::uint32_t>(rng.below(opts[it.option_b].level_count()));
      it.multiplier = std::exp(0.25 * rng.normal());
      p.interactions.push_back(it);
    }
  }

  const auto scales = encoded_scales(space);
  for (auto& r : p.resources) {
    r.bias = -1.0 + 0.5 * rng.normal();
    r.weights.resize(scales.size());
    for (std::size_t j = 0; j < scales.size(); ++j) r.weights[j] = 0.6 * rng.normal() / scales[j];
  }
  return p;
}

Dataset gen_environment(const ConfigurationSpace& space, const ApplicationProfile& profile,
                        const SurfaceParams& params,
                        std::optional<std::span<const Configuration>> configs,
                        std::string env_id) {
  params.check(space);
  if (auto problems = profile.problems(); !problems.empty()) fail(problems.front());
  std::vector<Configuration> all;
  std::span<const Configuration> list;
  if (configs) {
    list = *configs;
  } else {
    if (space.cardinality() > kEnumerationCap)
      fail("space cardinality " + std::to_string(space.cardinality()) +
           " exceeds the enumeration cap; pass an explicit configuration list");
    all = space.enumerate(kEnumerationCap);
    list = all;
  }

  Dataset d;
  d.env_id = std::move(env_id);
  d.space = space;
  d.samples.reserve(list.size());
  for (const auto& c : list) {
    if (auto problem = space.check_configuration(c); !problem.empty()) fail(problem);
    Sample s;
    s.profile = profile;
    s.configuration = c;
    s.responses[Metric::ExecTimeMs] = params.exec_time_ms(space, c);
    for (Metric m : {Metric::BramFrac, Metric::DspFrac, Metric::FfFrac, Metric::LutFrac})
      s.responses[m] = params.resource(space, c, m);
    d.samples.push_back(std::move(s));
  }
  return d;
}

void RelatednessSpec::check() const {
  if (!(rho >= 0.0 && rho <= 1.0)) fail("relatedness rho must lie in [0, 1]");
  if (!(gamma > 0.0)) fail("relatedness gamma must be > 0");
}

SurfaceParams derive_related_env(const SurfaceParams& source, const ConfigurationSpace& space,
                                 const RelatednessSpec& spec) {
  spec.check();
  source.check(space);
  const double keep = spec.rho * spec.gamma;
  const double blend = 1.0 - spec.rho;
  const SurfaceParams fresh = random_surface(space, derive_seed(spec.seed, 1), source.base_time_ms,
                                             source.noise_cv);
  Rng rng(derive_seed(spec.seed, 2));

  SurfaceParams t;
  t.seed = derive_seed(spec.seed, 3);
  t.noise_cv = source.noise_cv;
  // The target platform is faster; a more severe change (lower rho) moves
  // the overall speed further as well as the per-option behavior.
  const double severity = 1.0 - spec.rho;
  t.base_time_ms = source.base_time_ms * std::exp(-(0.3 + 1.5 * severity) * rng.uniform(0.75, 1.25));

  t.effects = source.effects;
  for (std::size_t j = 0; j < t.effects.size(); ++j)
    for (std::size_t l = 0; l < t.effects[j].size(); ++l)
      t.effects[j][l] = std::exp(keep * std::log(source.effects[j][l]) +
                                 blend * std::log(fresh.effects[j][l]));

  for (auto it : source.interactions) {
    it.multiplier = std::exp(keep * std::log(it.multiplier));
    t.interactions.push_back(it);
  }
  if (blend > 0.0)
    for (auto it : fresh.interactions) {
      it.multiplier = std::exp(blend * std::log(it.multiplier));
      t.interactions.push_back(it);
    }

  for (std::size_t k = 0; k < t.resources.size(); ++k) {
    const auto& s = source.resources[k];
    const auto& f = fresh.resources[k];
    t.resources[k].bias = spec.rho * s.bias + blend * f.bias;
    t.resources[k].weights.resize(s.weights.size());
    for (std::size_t j = 0; j < s.weights.size(); ++j)
      t.resources[k].weights[j] = spec.rho * s.weights[j] + blend * f.weights[j];
  }
  return t;
}

nlohmann::json EnvironmentSpec::to_json() const {
  return {{"surface", surface.to_json()},
          {"profile", {{"names", profile.names}, {"values", profile.values}}}};
}

EnvironmentSpec EnvironmentSpec::from_json(const nlohmann::json& j, const ConfigurationSpace& space) {
  EnvironmentSpec e;
  try {
    if (!j.is_object()) fail("environment parameters must be a JSON object");
    if (j.contains("surface")) {
      e.surface = SurfaceParams::from_json(j.at("surface"));
      e.profile.names = j.at("profile").at("names").get<std::vector<std::string>>();
      e.profile.values = j.at("profile").at("values").get<std::vector<double>>();
    } else {
      const auto seed = j.at("seed").get<std::uint64_t>();
      e.surface = random_surface(space, seed, j.value("base_time_ms", 100.0),
                                 j.value("noise_cv", kDefaultNoiseCv));
      std::uint64_t profile_seed = derive_seed(seed, 0x9f);
      std::size_t n_features = kDefaultProfileFeatures;
      if (j.contains("profile")) {
        profile_seed = j.at("profile").value("seed", profile_seed);
        n_features = j.at("profile").value("n_features", n_features);
      }
      e.profile = gen_profile(profile_seed, n_features);
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(std::string("malformed environment parameters: ") + ex.what());
  }
  e.surface.check(space);
  if (auto problems = e.profile.problems(); !problems.empty()) fail(problems.front());
  return e;
}

SplitResult brute_force_best_split(const Matrix& X, std::span<const double> y,
                                   std::span<const double> weights, std::size_t min_samples_leaf) {
  check_training_input(X, y, weights);
  const std::size_t n = X.rows;
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  auto weighted_sse = [&](const std::vector<std::size_t>& idx) {
    double sw = 0.0, swy = 0.0;
    for (auto i : idx) {
      sw += w(i);
      swy += w(i) * y[i];
    }
    const double mean = swy / sw;
    double sse = 0.0;
    for (auto i : idx) sse += w(i) * (y[i] - mean) * (y[i] - mean);
    return std::pair{sw, sse};
  };

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double parent = weighted_sse(all).second;

  SplitResult best;
  best.sse = parent;
  if (!(parent > 0.0)) return best;
  const double tol = kSplitTieTolerance * parent;
  double incumbent = parent - tol;

  for (std::size_t f = 0; f < X.cols; ++f) {
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) values.push_back(X(i, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
      if (!(threshold < values[v + 1])) threshold = values[v];
      std::vector<std::size_t> left, right;
      for (std::size_t i = 0; i < n; ++i) (X(i, f) <= threshold ? left : right).push_back(i);
      if (left.size() < min_samples_leaf || right.size() < min_samples_leaf) continue;
      auto [lw, lsse] = weighted_sse(left);
      auto [rw, rsse] = weighted_sse(right);
      if (!(lw > 0.0) || !(rw > 0.0)) continue;
      const double sse = lsse + rsse;
      if (sse < incumbent - (best.found ? tol : 0.0)) {
        best = SplitResult{true, f, threshold, sse};
        incumbent = sse;
      }
    }
  }
  return best;
}

}  // namespace leaper
