#pragma once

#include <span>
#include <string>
#include <vector>

#include "epikernel/draws_io.hpp"
#include "epikernel/sampler.hpp"

namespace epikernel {

/// Type-7 quantile: linear interpolation between order statistics at
/// h = (N - 1) prob.
double quantile(std::span<const double> values, double prob);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// Batch-means Monte Carlo standard error of the mean.
  double mcse = 0.0;
  /// Split-chain potential scale reduction; NaN when too few draws.
  double rhat = 0.0;
};

ParamSummary summarize_values(const std::string& name, std::span<const double> values, std::span<const int> chain,
                              double level = 0.95);

/// Median and equal-tail interval for every layout column.
std::vector<ParamSummary> summarize(const PosteriorDraws& draws, const ParameterLayout& layout,
                                    double level = 0.95);

struct InclusionProbabilities {
  std::vector<double> rate;
  std::vector<double> zero;
};

/// Posterior mean of gamma and gamma^z.
InclusionProbabilities inclusion_probabilities(const PosteriorDraws& draws);

double mean_deviance(const PosteriorDraws& draws);

/// Batch-means standard error, batches formed within each chain.
double batch_means_mcse(std::span<const double> values, std::span<const int> chain);

/// Split-R-hat over chains cut in half.
double split_rhat(std::span<const double> values, std::span<const int> chain);

}  // namespace epikernel
