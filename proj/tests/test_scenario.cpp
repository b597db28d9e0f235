#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "epikernel/branching.hpp"
#include "epikernel/error.hpp"
#include "epikernel/scenario.hpp"
#include "test_support.hpp"

using namespace epikernel;

namespace {

const Dataset& evros() {
  static const Dataset d = load_dataset(test::evros_manifest());
  return d;
}

PosteriorDraws constant_draws(const ModelState& s, const ModelSpec& spec, int k) {
  PosteriorDraws d;
  d.spec = spec;
  for (int i = 0; i < k; ++i) {
    d.states.push_back(s);
    d.deviance.push_back(0.0);
    d.chain.push_back(0);
  }
  d.acceptance.resize(1);
  return d;
}

ModelState random_state(const Dataset& d, const ModelSpec& spec, std::mt19937_64& gen) {
  std::normal_distribution<double> z(0.0, 0.3);
  auto s = ModelState::initial(d, spec);
  for (auto* b : {&s.rate, &s.zero}) {
    for (Eigen::Index j = 0; j < b->beta.size(); ++j) b->beta(j) = z(gen);
    for (auto& g : b->gamma) g = gen() % 2;
    b->ar_coef = z(gen);
    b->kernel_coef = z(gen);
    for (Eigen::Index j = 0; j < b->random_effects.size(); ++j) b->random_effects(j) = z(gen);
    b->kernel.post.a = 5.0 + std::abs(z(gen));
    b->kernel.pre.a = 2.0 + std::abs(z(gen));
  }
  s.rate.kernel.t_change = s.zero.kernel.t_change = 120.5;
  return s;
}

}  // namespace

TEST(Scenario, InterceptOnlyGivesPoissonExtinction) {
  ModelSpec spec{std::nullopt, false};
  auto s = ModelState::initial(evros(), spec);
  s.rate.beta.setZero();
  s.rate.beta(0) = std::log(2.0);
  s.rate.ar_coef = 0.0;
  const auto draws = constant_draws(s, spec, 50);
  for (const auto& sc : default_scenarios()) {
    const auto r = scenario_extinction(draws, sc, evros());
    EXPECT_NEAR(r.median, 0.203188, 5e-7);
    EXPECT_EQ(r.lo, r.hi);
    for (double q : r.q) EXPECT_NEAR(q, 0.203188, 5e-7);
  }
}

TEST(Scenario, OccupationAtCriticalRate) {
  ModelSpec spec{std::nullopt, false};
  auto s = ModelState::initial(evros(), spec);
  s.rate.beta.setZero();
  s.rate.ar_coef = 0.0;
  const auto draws = constant_draws(s, spec, 10);
  const auto res = scenario_occupation(draws, default_scenarios().front(), evros(), {1, 2, 5});
  ASSERT_EQ(res.size(), 3u);
  EXPECT_DOUBLE_EQ(res[0].mean, 1.0);
  EXPECT_DOUBLE_EQ(res[1].mean, 0.5);
  EXPECT_DOUBLE_EQ(res[2].mean, 0.2);
}

TEST(Scenario, PerDrawFormulaWithCovariates) {
  ModelSpec spec{KernelFamily::A, true};
  std::mt19937_64 gen(4);
  PosteriorDraws draws = constant_draws(random_state(evros(), spec, gen), spec, 1);
  for (int k = 0; k < 30; ++k) draws.states.push_back(random_state(evros(), spec, gen));
  draws.deviance.assign(draws.states.size(), 0.0);
  draws.chain.assign(draws.states.size(), 0);
  ScenarioSpec sc{"hot", {{"max_temp", CovariateSetting::parse("max")}, {"distance", CovariateSetting::parse("min")}}, 2};
  const auto point = resolve_scenario(sc, evros(), default_scenario_values());
  const auto means = covariate_means(evros());
  const int j = evros().covariate_index("max_temp");
  EXPECT_NEAR(point.x(j - 1), 40.7 - means(j - 1), 1e-12);
  EXPECT_DOUBLE_EQ(point.distance, 0.02);

  const auto r = scenario_extinction(draws, sc, evros());
  const auto occ = scenario_occupation(draws, sc, evros(), {3});
  double mean_occ = 0.0;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const auto& s = draws.states[k];
    auto eta = [&](const RegressionBlock& b) {
      double v = b.beta(0) + b.ar_coef * 2;
      for (int c = 0; c < evros().n_covariates(); ++c) {
        if (b.gamma[c]) v += b.beta(c + 1) * point.x(c);
      }
      return v + b.kernel_coef * std::pow(1.0 + 0.02 / b.kernel.post.a, -b.kernel.post.c);
    };
    const double lambda = std::exp(eta(s.rate));
    EXPECT_NEAR(r.q[k], zip_extinction(extinction_poisson(lambda), logistic(eta(s.zero))), 1e-12);
    mean_occ += occupation_time(lambda, 3) / draws.size();
  }
  EXPECT_NEAR(occ[0].mean, mean_occ, 1e-12);
}

TEST(Scenario, UnknownCovariateIsConfigError) {
  ScenarioSpec sc{"bad", {{"wind_speed", CovariateSetting::parse("max")}}, 1};
  EXPECT_THROW(resolve_scenario(sc, evros(), default_scenario_values()), ConfigError);
  EXPECT_THROW(CovariateSetting::parse("biggest"), ConfigError);
}

TEST(Decomposition, IdentityAndSeparability) {
  const auto centered = center_covariates(evros());
  ModelSpec spec{KernelFamily::A, true};
  std::mt19937_64 gen(9);
  PosteriorDraws draws = constant_draws(random_state(centered, spec, gen), spec, 1);
  for (int k = 0; k < 5; ++k) draws.states.push_back(random_state(centered, spec, gen));
  draws.deviance.assign(draws.states.size(), 0.0);
  draws.chain.assign(draws.states.size(), 0);
  const auto map = default_component_map(centered);
  const auto dec = decompose_mu(draws, centered, map);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    for (int i = 0; i < centered.n_weeks(); ++i) {
      const double mu = rate_predictor(draws.states[k], centered, i + 1, spec.kernel);
      EXPECT_NEAR(dec.endemic[k][i] + dec.epidemic[k][i], mu, 1e-12);
      EXPECT_NEAR(dec.mu[k][i], mu, 1e-12);
    }
  }

  // Changing epidemic coefficients leaves the endemic part alone and the
  // other way round.
  PosteriorDraws moved = draws;
  const int v = centered.covariate_index("villages_prev_week");
  for (auto& s : moved.states) {
    s.rate.ar_coef += 1.3;
    s.rate.kernel_coef -= 0.7;
    s.rate.beta(v) += 0.5;
  }
  const auto dec2 = decompose_mu(moved, centered, map);
  EXPECT_EQ(dec2.endemic, dec.endemic);
  moved = draws;
  for (auto& s : moved.states) {
    s.rate.beta(0) += 2.0;
    s.rate.random_effects.array() += 0.4;
    s.rate.beta(3) -= 0.2;
  }
  const auto dec3 = decompose_mu(moved, centered, map);
  EXPECT_EQ(dec3.epidemic, dec.epidemic);

  for (auto& s : moved.states) {
    s.rate.ar_coef = 0.0;
    s.rate.kernel_coef = 0.0;
    s.rate.beta(v) = 0.0;
  }
  for (const auto& row : decompose_mu(moved, centered, map).epidemic) {
    for (double x : row) EXPECT_EQ(x, 0.0);
  }

  auto partial = map;
  partial.erase("kernel");
  EXPECT_THROW(decompose_mu(draws, centered, partial), ConfigError);
}
