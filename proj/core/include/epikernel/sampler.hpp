#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epikernel/data.hpp"
#include "epikernel/model.hpp"
#include "epikernel/priors.hpp"

namespace epikernel {

/// Block names accepted by McmcConfig::frozen.
///   "u", "beta", "zero_beta", "gamma", "phi", "kernel", "t_change", "ar",
///   "kernel_coef", "random_effects", "sigma_b", "g", "latent"
struct McmcConfig {
  long total_iters = 105000;
  long burn_in = 5000;
  long thin = 10;
  int chains = 2;
  std::uint64_t seed = 1;
  /// Robbins-Monro target for scalar random-walk steps.
  double target_accept = 0.44;
  /// Adaptation stops after this many iterations; 0 means at burn-in.
  long adapt_iters = 0;
  std::set<std::string> frozen;
  /// Starting point for every chain instead of ModelState::initial.
  std::optional<ModelState> initial;
  /// Keep the latent path and zero latents in stored draws.
  bool store_latent = false;

  void validate() const;
  long draws_per_chain() const { return (total_iters - burn_in) / thin; }
};

struct AcceptanceEntry {
  std::string name;
  long proposed = 0;
  long accepted = 0;
  /// Log step size when adaptation stopped and at the end of the run.
  double log_step_frozen = 0.0;
  double log_step_final = 0.0;

  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct PosteriorDraws {
  std::vector<ModelState> states;
  /// -2 x observation log-likelihood per stored state.
  std::vector<double> deviance;
  /// Chain index per stored state; chains are stored one after another.
  std::vector<int> chain;
  std::vector<std::vector<AcceptanceEntry>> acceptance;
  ModelSpec spec;

  std::size_t size() const { return states.size(); }
  int n_chains() const { return static_cast<int>(acceptance.size()); }
};

/// Metropolis-within-Gibbs over the full ModelState. The dataset is used as
/// given; callers center the covariates beforehand. Chains run concurrently
/// with seeds derived from `config.seed`, so the result depends only on the
/// inputs.
PosteriorDraws run_mcmc(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec,
                        const McmcConfig& config);

/// Full conditional P(u_i = 1 | rest): p / (p + (1-p) e^-theta) at y = 0,
/// and 0 otherwise.
double zero_latent_probability(int y, double theta, double p);

/// Unnormalized log posterior of a state (observations, latent path and all
/// priors). Week 1 of the latent path is taken as mu_1.
double log_posterior(const ModelState& state, const Dataset& dataset, const PriorConfig& prior,
                     const ModelSpec& spec);

/// EIU prior variances from a pilot fit with every covariate included under
/// independent N(0, coef_var) priors.
PriorConfig fit_eiu_prior(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec,
                          const McmcConfig& pilot);

}  // namespace epikernel
