#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "epikernel/csv.hpp"
#include "epikernel/data.hpp"
#include "test_support.hpp"

using namespace epikernel;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EPIKERNEL_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& extra = "",
                                   const std::string& dataset = "") {
  const auto path = dir / "config.json";
  std::ofstream out(path);
  out << "{\"dataset\": \"" << (dataset.empty() ? test::evros_manifest().string() : dataset) << "\","
      << "\"mcmc\": {\"total_iters\": 1500, \"burn_in\": 500, \"thin\": 10, \"chains\": 1},"
      << "\"seed\": 5" << extra << "}";
  return path;
}

std::size_t data_rows(const std::filesystem::path& p) { return csv::read(p).rows.size(); }

}  // namespace

TEST(Cli, FitWritesArtifactsAndIsDeterministic) {
  const auto dir = test::scratch_dir("cli_fit");
  const auto cfg = write_config(dir);
  ASSERT_EQ(run("fit --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("fit --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(data_rows(dir / "a" / "draws.csv"), 100u);
  for (const char* f : {"draws.csv", "summary.csv", "inclusion.csv", "deviance.csv", "acceptance.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
    EXPECT_EQ(test::slurp(dir / "a" / f), test::slurp(dir / "b" / f)) << f;
  }
  const auto manifest = test::slurp(dir / "a" / "run_manifest.json");
  EXPECT_NE(manifest.find("config_hash"), std::string::npos);
  EXPECT_NE(manifest.find("\"seed\": 5"), std::string::npos);
  EXPECT_EQ(csv::read(dir / "a" / "summary.csv").header,
            (std::vector<std::string>{"parameter", "mean", "sd", "median", "lo95", "hi95", "mcse", "rhat"}));

  ASSERT_EQ(run("fit --config " + cfg.string() + " --seed 6 --out " + (dir / "c").string()), 0);
  EXPECT_NE(test::slurp(dir / "a" / "draws.csv"), test::slurp(dir / "c" / "draws.csv"));

  for (const char* c : {"extinct", "occupy", "decompose"}) {
    EXPECT_EQ(run(std::string(c) + " --config " + cfg.string() + " --out " + (dir / "a").string()), 0) << c;
  }
  const auto ext = csv::read(dir / "a" / "extinction.csv");
  EXPECT_EQ(ext.header, (std::vector<std::string>{"scenario", "median", "lo95", "hi95"}));
  EXPECT_EQ(ext.rows.size(), 7u);
  EXPECT_EQ(data_rows(dir / "a" / "decomposition.csv"), 260u);
  EXPECT_EQ(data_rows(dir / "a" / "occupation.csv"), 7u * 6u);
}

TEST(Cli, ExitCodes) {
  const auto dir = test::scratch_dir("cli_exit");
  EXPECT_EQ(run("fit --config " + (dir / "nope.json").string()), 2);
  EXPECT_EQ(run("fit"), 2);
  EXPECT_EQ(run("launch --config x"), 2);

  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run("fit --config " + (dir / "broken.json").string()), 2);

  const auto cfg = write_config(dir, "", (dir / "missing" / "manifest.json").string());
  EXPECT_EQ(run("fit --config " + cfg.string() + " --out " + (dir / "o").string()), 3);

  const auto good = write_config(dir);
  EXPECT_EQ(run("sweep-alpha --config " + good.string() + " --alpha 5 --out " + (dir / "o").string()), 2);
  EXPECT_EQ(run("fit --config " + good.string() + " --kernel Z"), 2);
  EXPECT_EQ(run("extinct --config " + good.string() + " --out " + (dir / "empty").string()), 3);

  // Two identical covariate columns make the g-prior singular.
  auto d = load_dataset(test::evros_manifest());
  d.design.col(5) = d.design.col(4);
  save_dataset(d, dir / "collinear");
  const auto col = write_config(dir / "collinear", "", (dir / "collinear" / "manifest.json").string());
  EXPECT_EQ(run("fit --config " + col.string() + " --out " + (dir / "o2").string()), 4);
}

TEST(Cli, SweepAndCompare) {
  const auto dir = test::scratch_dir("cli_sweep");
  const auto cfg = write_config(dir, ", \"alphas\": [2.5, 4.0], \"families\": [\"A\"]");
  ASSERT_EQ(run("sweep-alpha --config " + cfg.string() + " --out " + (dir / "s").string()), 0);
  const auto t = csv::read(dir / "s" / "inclusion_by_alpha.csv");
  EXPECT_EQ(t.rows.size(), 2u * 18u);
  EXPECT_TRUE(std::filesystem::exists(dir / "s" / "alpha_2_5" / "draws.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "s" / "alpha_4" / "draws.csv"));

  ASSERT_EQ(run("compare-kernels --config " + cfg.string() + " --out " + (dir / "k").string()), 0);
  const auto k = csv::read(dir / "k" / "kernel_comparison.csv");
  ASSERT_EQ(k.rows.size(), 1u);
  EXPECT_EQ(k.rows[0][1], "A");

  const auto dup = write_config(dir, ", \"families\": [\"A\", \"B\", \"A\"]");
  EXPECT_EQ(run("compare-kernels --config " + dup.string() + " --out " + (dir / "d").string()), 2);
}

TEST(Cli, SimulateIsDeterministic) {
  const auto dir = test::scratch_dir("cli_sim");
  std::ofstream(dir / "truth.json") << R"({"n": 104, "years": 2, "p": 3, "phi": 2.0,
    "rate": {"beta": [0.3, 0.5, 0.0, 0.0], "sigma_b": 0.2}, "zero": {"beta": [-1.0, 0.0, 0.0, 0.8]}})";
  const auto cfg = write_config(dir, ", \"truth\": \"truth.json\"");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
  const auto d = load_dataset(dir / "a" / "dataset" / "manifest.json", true);
  EXPECT_EQ(d.n_weeks(), 104);
  EXPECT_EQ(test::slurp(dir / "a" / "dataset" / "counts.csv"), test::slurp(dir / "b" / "dataset" / "counts.csv"));
  EXPECT_EQ(test::slurp(dir / "a" / "truth.json"), test::slurp(dir / "b" / "truth.json"));
  EXPECT_EQ(run("simulate --config " + write_config(dir).string() + " --out " + (dir / "c").string()), 2);
}
