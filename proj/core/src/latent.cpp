#include "epikernel/latent.hpp"

#include <cmath>
#include <numbers>

#include "epikernel/error.hpp"

namespace epikernel {

double OUParams::phi() const { return std::exp(theta); }

OUParams OUParams::from_phi(double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ValidationError("phi must be positive and finite");
  return OUParams{std::log(phi)};
}

OUMoments ou_mean_var(double mu, double lambda_prev, double phi, double delta) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ValidationError("phi must be positive and finite");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be positive and finite");
  const double decay = std::exp(-phi * delta);
  // -expm1 keeps the Brownian limit (var -> delta as phi -> 0) accurate.
  const double var = -std::expm1(-2.0 * phi * delta) / (2.0 * phi);
  return {mu + (lambda_prev - mu) * decay, var};
}

double ou_logpdf(double lambda_next, double mu, double lambda_prev, double phi, double delta) {
  const auto m = ou_mean_var(mu, lambda_prev, phi, delta);
  const double z = lambda_next - m.mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * m.var) + z * z / m.var);
}

OUMoments ou_bridge(double lambda_prev, double lambda_next, double mu_here, double mu_next, double phi,
                    double delta) {
  const auto fwd = ou_mean_var(mu_here, lambda_prev, phi, delta);
  const double decay = std::exp(-phi * delta);
  // lambda_next = mu_next (1 - decay) + decay * lambda_here + noise(var)
  const double e2 = decay * decay;
  const double target = lambda_next - mu_next * (1.0 - decay);
  const double precision = (1.0 + e2) / fwd.var;
  return {(fwd.mean + decay * target) / (1.0 + e2), 1.0 / precision};
}

std::vector<double> simulate_path(std::span<const double> mu, double phi, double lambda_0, Rng& rng,
                                  double delta) {
  std::vector<double> path;
  path.reserve(mu.size());
  double prev = lambda_0;
  for (double m : mu) {
    const auto step = ou_mean_var(m, prev, phi, delta);
    prev = rng.normal(step.mean, std::sqrt(step.var));
    path.push_back(prev);
  }
  return path;
}

}  // namespace epikernel
