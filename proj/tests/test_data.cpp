#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "epikernel/data.hpp"
#include "epikernel/error.hpp"
#include "test_support.hpp"

using namespace epikernel;

TEST(PairwiseDistance, KnownTriangles) {
  EXPECT_DOUBLE_EQ(pairwise_distance({0, 0}, {0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(pairwise_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(pairwise_distance({1.25, -2}, {4.25, 2}), 5.0);
  EXPECT_THROW(pairwise_distance({NAN, 0}, {0, 0}), ValidationError);
}

TEST(PairwiseDistance, TriangleInequalityOnRandomTriples) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int k = 0; k < 1000; ++k) {
    FarmLocation a{u(gen), u(gen)}, b{u(gen), u(gen)}, c{u(gen), u(gen)};
    EXPECT_LE(pairwise_distance(a, c), pairwise_distance(a, b) + pairwise_distance(b, c) + 1e-12);
  }
}

TEST(DistanceBundle, Conventions) {
  const double dmin = 250.0;
  {
    std::vector<int> y{0, 0};
    auto b = build_distance_bundle({{}, {}}, y, dmin);
    ASSERT_EQ(b.week_values(2).size(), 1u);
    EXPECT_EQ(b.week_values(2)[0], dmin);
  }
  {
    std::vector<int> y{0, 3};
    auto b = build_distance_bundle({{}, {{0, 0}, {1, 1}, {2, 2}}}, y, dmin);
    ASSERT_EQ(b.week_values(2).size(), 1u);
    EXPECT_EQ(b.week_values(2)[0], 1.0);
  }
  {
    std::vector<int> y{2, 1};
    auto b = build_distance_bundle({{{0, 0}, {3, 4}}, {{0, 0}}}, y, dmin);
    auto v = b.week_values(2);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[1], 5.0);
  }
}

TEST(Dataset, EvrosFixtureShape) {
  const auto d = load_dataset(test::evros_manifest());
  EXPECT_EQ(d.n_weeks(), 260);
  EXPECT_EQ(d.total_cases(), 249);
  EXPECT_EQ(d.n_covariates(), 9);
  EXPECT_EQ(d.n_years, 5);
  EXPECT_EQ(d.distances.flat.size(), 869u);
  EXPECT_EQ(d.distances.range_count(), 259u);
  for (int i = 0; i < d.n_weeks(); ++i) EXPECT_EQ(d.design(i, 0), 1.0);
  for (int i = 1; i < d.n_weeks(); ++i) EXPECT_LE(d.years[i - 1], d.years[i]);
}

TEST(Dataset, SaveLoadRoundTripIsByteIdentical) {
  const auto dir = test::scratch_dir("roundtrip");
  const auto d = load_dataset(test::evros_manifest());
  save_dataset(d, dir);
  const auto src = test::evros_manifest().parent_path();
  for (const char* f : {"manifest.json", "counts.csv", "covariates.csv", "distances.csv", "dist_index.csv"}) {
    EXPECT_EQ(test::slurp(dir / f), test::slurp(src / f)) << f;
  }
  const auto again = load_dataset(dir / "manifest.json");
  EXPECT_EQ(again.counts, d.counts);
  EXPECT_TRUE(again.design == d.design);
  EXPECT_EQ(again.distances.flat, d.distances.flat);
}

TEST(Dataset, EmptyFileIsParseError) {
  const auto dir = test::scratch_dir("empty");
  const auto d = load_dataset(test::evros_manifest());
  save_dataset(d, dir);
  std::ofstream(dir / "counts.csv", std::ios::trunc).close();
  EXPECT_THROW(load_dataset(dir / "manifest.json"), ParseError);
}

TEST(Dataset, ExtraCovariateColumnsAreDimensionError) {
  const auto dir = test::scratch_dir("wide");
  const auto d = load_dataset(test::evros_manifest());
  save_dataset(d, dir);
  std::istringstream in(test::slurp(dir / "covariates.csv"));
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    out << line << (header ? ",extra1,extra2" : ",0,0") << '\n';
    header = false;
  }
  std::ofstream(dir / "covariates.csv", std::ios::trunc) << out.str();
  EXPECT_THROW(load_dataset(dir / "manifest.json"), DimensionError);
}

TEST(Dataset, MissingManifestIsIoError) {
  EXPECT_THROW(load_dataset(test::scratch_dir("missing") / "manifest.json"), IoError);
}

TEST(Dataset, CenteringZeroesColumnMeans) {
  const auto c = center_covariates(load_dataset(test::evros_manifest()));
  const auto m = covariate_means(c);
  for (Eigen::Index j = 0; j < m.size(); ++j) EXPECT_NEAR(m(j), 0.0, 1e-12);
  for (int i = 0; i < c.n_weeks(); ++i) EXPECT_EQ(c.design(i, 0), 1.0);
}
