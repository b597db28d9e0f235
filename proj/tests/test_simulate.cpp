#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "epikernel/error.hpp"
#include "epikernel/simulate.hpp"
#include "test_support.hpp"

using namespace epikernel;

namespace {

SimulationTruth basic_truth(bool zero_inflated) {
  SimulationTruth t;
  t.zero_inflated = zero_inflated;
  for (int j = 0; j < t.p; ++j) t.covariate_names.push_back("x" + std::to_string(j + 1));
  for (auto* b : {&t.rate, &t.zero}) {
    b->beta = Eigen::VectorXd::Zero(t.p + 1);
    b->gamma.assign(t.p, 0);
    b->random_effects = Eigen::VectorXd::Zero(t.n_years);
    b->sigma_b = 0.3;
  }
  t.rate.beta(0) = 0.5;
  t.rate.beta(2) = 0.6;
  t.rate.gamma[1] = 1;
  t.zero.beta(0) = -0.5;
  return t;
}

}  // namespace

TEST(Simulate, SeedDeterminism) {
  const auto t = basic_truth(true);
  const auto a = simulate_dataset(t, 11);
  const auto b = simulate_dataset(t, 11);
  const auto c = simulate_dataset(t, 12);
  EXPECT_EQ(a.dataset.counts, b.dataset.counts);
  EXPECT_TRUE(a.dataset.design == b.dataset.design);
  EXPECT_EQ(a.dataset.distances.flat, b.dataset.distances.flat);
  EXPECT_NE(a.dataset.counts, c.dataset.counts);
}

TEST(Simulate, StructureAndZeroLatents) {
  const auto t = basic_truth(true);
  auto r = simulate_dataset(t, 3);
  EXPECT_EQ(r.dataset.n_weeks(), 260);
  EXPECT_EQ(r.dataset.n_years, 5);
  EXPECT_EQ(r.dataset.years.back(), 5);
  EXPECT_NO_THROW(validate_dataset(r.dataset, true));
  int structural = 0;
  for (int i = 0; i < 260; ++i) {
    if (r.state.zero_latents[i]) {
      EXPECT_EQ(r.dataset.counts[i], 0);
      ++structural;
    }
  }
  // p = logistic(-0.5) ~ 0.38 of weeks.
  EXPECT_NEAR(structural / 260.0, 1.0 / (1.0 + std::exp(0.5)), 0.1);
}

TEST(Simulate, WithoutZeroInflationCountsArePoissonGivenPath) {
  const auto t = basic_truth(false);
  double pearson = 0.0;
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = simulate_dataset(t, seed);
    for (int i = 0; i < r.dataset.n_weeks(); ++i) {
      EXPECT_EQ(r.state.zero_latents[i], 0);
      const double theta = std::exp(r.state.latent_lograte(i));
      pearson += (r.dataset.counts[i] - theta) * (r.dataset.counts[i] - theta) / theta;
      ++n;
    }
  }
  // Dispersion index 1 with sd sqrt(2/n) roughly.
  EXPECT_NEAR(pearson / n, 1.0, 5 * std::sqrt(2.0 / n) + 0.05);
}

TEST(Simulate, TruthValidationAndFile) {
  auto t = basic_truth(true);
  t.rate.kernel_coef = 1.0;
  EXPECT_THROW(t.validate(), ValidationError);
  t = basic_truth(true);
  t.phi = -1;
  EXPECT_THROW(t.validate(), ValidationError);

  const auto dir = test::scratch_dir("truth");
  std::ofstream(dir / "truth.json") << R"({"n": 52, "years": 2, "p": 2, "covariate_names": ["a", "b"], "phi": 1.5,
    "rate": {"beta": [0.2, 0.4, 0.0], "ar_coef": 0.1, "sigma_b": 0.2},
    "zero": {"beta": [-1.0, 0.0, 0.0]}})";
  const auto loaded = load_truth(dir / "truth.json");
  EXPECT_EQ(loaded.n, 52);
  EXPECT_EQ(loaded.rate.gamma, (std::vector<std::uint8_t>{1, 0}));
  const auto r = simulate_dataset(loaded, 1);
  save_truth(r, loaded, 1, dir / "out.json");
  EXPECT_TRUE(std::filesystem::exists(dir / "out.json"));
  std::ofstream(dir / "bad.json") << R"({"n": 52, "p": 2, "rate": {"beta": [0.2]}})";
  EXPECT_THROW(load_truth(dir / "bad.json"), ConfigError);
}
