#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "epikernel/data.hpp"
#include "epikernel/model.hpp"

namespace epikernel {

/// Ground truth for a synthetic ZIP-OU dataset. Covariates are independent
/// standard normal columns; weeks are split evenly into years. The kernel
/// term is absent: it depends on the count being simulated.
struct SimulationTruth {
  int n = 260;
  int n_years = 5;
  int p = 9;
  std::vector<std::string> covariate_names;
  /// Covariate coefficients with a zero entry mark inactive covariates.
  RegressionBlock rate;
  RegressionBlock zero;
  double phi = 2.0;
  bool zero_inflated = true;
  double d_min = 250.0;
  /// Side of the square in which case farms are placed, in km.
  double region_km = 50.0;

  /// Throws ValidationError on inconsistent sizes or values.
  void validate() const;
};

/// Parses a truth JSON file; see README for the schema.
SimulationTruth load_truth(const std::filesystem::path& path);

struct SimulationResult {
  Dataset dataset;
  /// Truth as a model state, including the simulated latent path and zero
  /// latents.
  ModelState state;
};

SimulationResult simulate_dataset(const SimulationTruth& truth, std::uint64_t seed);

/// Writes the truth (with the realised random effects) as JSON.
void save_truth(const SimulationResult& result, const SimulationTruth& truth, std::uint64_t seed,
                const std::filesystem::path& path);

}  // namespace epikernel
