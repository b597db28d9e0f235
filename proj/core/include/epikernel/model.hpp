#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epikernel/data.hpp"
#include "epikernel/kernels.hpp"
#include "epikernel/latent.hpp"
#include "epikernel/priors.hpp"

namespace epikernel {

/// Coefficients of one linear predictor (rate or zero-inflation).
struct RegressionBlock {
  /// Intercept followed by the p covariate coefficients.
  Eigen::VectorXd beta;
  /// Inclusion indicators for beta[1..p].
  std::vector<std::uint8_t> gamma;
  double kernel_coef = 0.0;
  /// Coefficient on last week's count.
  double ar_coef = 0.0;
  /// One effect per year.
  Eigen::VectorXd random_effects;
  double sigma_b = 1.0;
  ChangePoint kernel;
};

/// Which terms the model carries.
struct ModelSpec {
  std::optional<KernelFamily> kernel = KernelFamily::A;
  bool zero_inflated = true;
};

struct ModelState {
  RegressionBlock rate;
  RegressionBlock zero;
  OUParams ou;
  double g = 1.0;
  /// lambda_i, the latent log-rate per week.
  Eigen::VectorXd latent_lograte;
  /// u_i = 1 marks a structural zero.
  std::vector<std::uint8_t> zero_latents;

  /// Starting configuration: all coefficients 0, gamma 0, phi = e, kernel
  /// a = c = 1 (r = 0.01 for family C), change point at mid-series, g = 1, and
  /// the latent path at log(y + 0.5).
  static ModelState initial(const Dataset& dataset, const ModelSpec& spec);
};

double logistic(double x);

/// Shared linear predictor of a block for a 1-based week. Week 1 carries no
/// lag or kernel term.
double block_predictor(const RegressionBlock& block, const Dataset& dataset, int week,
                       std::optional<KernelFamily> kernel);

/// mu_i, the level the latent log-rate reverts to.
double rate_predictor(const ModelState& state, const Dataset& dataset, int week, std::optional<KernelFamily> kernel);
/// logit(p_i) of the structural-zero probability.
double zero_predictor(const ModelState& state, const Dataset& dataset, int week, std::optional<KernelFamily> kernel);

/// log of p 1{y=0} + (1-p) Poisson(y | theta).
double zip_loglik_point(int y, double theta, double p);
/// Same density parameterised by log theta and logit p; stable for extreme
/// arguments. `logit_p = -inf` gives the Poisson log-pmf.
double zip_loglik_logscale(int y, double log_theta, double logit_p);

/// Sum over weeks of the observation log-likelihood given the latent path.
double observation_loglik(const ModelState& state, const Dataset& dataset, const ModelSpec& spec);
/// Observation log-likelihood plus the OU transition log-densities of the
/// latent path (weeks 2..n).
double total_loglik(const ModelState& state, const Dataset& dataset, const ModelSpec& spec);
/// -2 times the observation log-likelihood.
double deviance(const ModelState& state, const Dataset& dataset, const ModelSpec& spec);

/// X'X of the non-intercept columns.
Eigen::MatrixXd covariate_crossproduct(const Dataset& dataset);

}  // namespace epikernel
