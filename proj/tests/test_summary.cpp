#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "epikernel/draws_io.hpp"
#include "epikernel/error.hpp"
#include "epikernel/summary.hpp"
#include "test_support.hpp"

using namespace epikernel;

TEST(Quantile, TypeSeven) {
  std::vector<double> v(10000);
  for (int i = 0; i < 10000; ++i) v[i] = i + 1;
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 5000.5);
  EXPECT_NEAR(quantile(v, 0.025), 250.975, 1e-9);
  EXPECT_NEAR(quantile(v, 0.975), 9750.025, 1e-9);
  std::vector<double> c(20, 3.25);
  const std::vector<int> chain(20, 0);
  const auto s = summarize_values("c", c, chain);
  EXPECT_EQ(s.lo, s.hi);
  EXPECT_EQ(s.median, 3.25);
}

TEST(Diagnostics, McseAndRhat) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> v(40000);
  std::vector<int> chain(40000);
  for (int i = 0; i < 40000; ++i) {
    v[i] = z(gen);
    chain[i] = i / 20000;
  }
  EXPECT_NEAR(batch_means_mcse(v, chain), 1.0 / std::sqrt(40000.0), 0.002);
  EXPECT_NEAR(split_rhat(v, chain), 1.0, 0.01);
  for (int i = 20000; i < 40000; ++i) v[i] += 3.0;
  EXPECT_GT(split_rhat(v, chain), 1.5);
}

TEST(MeanDeviance, Values) {
  PosteriorDraws d;
  d.deviance = {200.0};
  EXPECT_EQ(mean_deviance(d), 200.0);
  d.deviance = {200.0, 240.0};
  EXPECT_EQ(mean_deviance(d), 220.0);
}

TEST(Inclusion, AllIncluded) {
  const auto ds = test::toy_dataset({1, 2, 0, 1}, 3, 1);
  ModelSpec spec{std::nullopt, true};
  PosteriorDraws d;
  d.spec = spec;
  auto s = ModelState::initial(ds, spec);
  s.rate.gamma = {1, 1, 0};
  s.zero.gamma = {0, 1, 0};
  d.states = {s, s, s};
  d.states[2].rate.gamma[2] = 1;
  const auto inc = inclusion_probabilities(d);
  EXPECT_DOUBLE_EQ(inc.rate[0], 1.0);
  EXPECT_DOUBLE_EQ(inc.rate[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(inc.zero[1], 1.0);
  EXPECT_DOUBLE_EQ(inc.zero[0], 0.0);
}

TEST(DrawsIo, RoundTripEveryFamily) {
  const auto ds = test::toy_dataset({1, 2, 0, 1, 3, 0}, 2, 2);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (std::optional<KernelFamily> k :
       {std::optional<KernelFamily>{}, std::optional{KernelFamily::A}, std::optional{KernelFamily::C},
        std::optional{KernelFamily::E}}) {
    ModelSpec spec{k, true};
    const auto layout = ParameterLayout::of(spec, 2, 2);
    PosteriorDraws d;
    d.spec = spec;
    for (int i = 0; i < 4; ++i) {
      auto s = ModelState::initial(ds, spec);
      auto flat = layout.flatten(s);
      for (std::size_t c = 0; c < flat.size(); ++c) {
        if (layout.names()[c].find("gamma") == std::string::npos) flat[c] = u(gen) * (i + 1) / 3.0;
      }
      d.states.push_back(layout.unflatten(flat));
      d.deviance.push_back(100.0 + u(gen));
      d.chain.push_back(i / 2);
    }
    d.acceptance.resize(2);
    const auto path = test::scratch_dir("draws_" + std::to_string(k ? static_cast<int>(*k) : -1)) / "draws.csv";
    write_draws(path, d, layout);
    ParameterLayout back;
    const auto read = read_draws(path, k, &back);
    EXPECT_EQ(back.names(), layout.names());
    ASSERT_EQ(read.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(layout.flatten(read.states[i]), layout.flatten(d.states[i]));
      EXPECT_EQ(read.deviance[i], d.deviance[i]);
      EXPECT_EQ(read.chain[i], d.chain[i]);
    }
    if (k) {
      EXPECT_THROW(read_draws(path, std::nullopt), DataError);
    }
  }
}
