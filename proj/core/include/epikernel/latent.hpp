#pragma once

#include <span>
#include <vector>

#include "epikernel/rng.hpp"

namespace epikernel {

/// Mean-reversion rate of the latent log-rate, carried on the log scale.
struct OUParams {
  double theta = 1.0;
  double phi() const;
  static OUParams from_phi(double phi);
};

struct OUMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// Exact transition moments of d lambda = -phi (lambda - mu) dt + dB over
/// an interval `delta` with mu held fixed:
///   mean = mu + (lambda_prev - mu) exp(-phi delta)
///   var  = (1 - exp(-2 phi delta)) / (2 phi)
OUMoments ou_mean_var(double mu, double lambda_prev, double phi, double delta = 1.0);

double ou_logpdf(double lambda_next, double mu, double lambda_prev, double phi, double delta = 1.0);

/// Gaussian conditional of an interior point given both neighbours, used as
/// the single-site proposal for the latent path.
OUMoments ou_bridge(double lambda_prev, double lambda_next, double mu_here, double mu_next, double phi,
                    double delta = 1.0);

/// Draws path[i] from the exact transition out of path[i-1] (lambda_0 for
/// i = 0) with mean level mu[i].
std::vector<double> simulate_path(std::span<const double> mu, double phi, double lambda_0, Rng& rng,
                                  double delta = 1.0);

}  // namespace epikernel
