#include "epikernel/model.hpp"

#include <cmath>
#include <limits>

#include "epikernel/error.hpp"

namespace epikernel {

namespace {

RegressionBlock initial_block(const Dataset& dataset, const ModelSpec& spec) {
  RegressionBlock b;
  const int p = dataset.n_covariates();
  b.beta = Eigen::VectorXd::Zero(p + 1);
  b.gamma.assign(p, 0);
  b.random_effects = Eigen::VectorXd::Zero(dataset.n_years);
  b.sigma_b = 1.0;
  b.kernel.t_change = 0.5 * (1.0 + dataset.n_weeks());
  if (spec.kernel == KernelFamily::C) {
    b.kernel.pre.r = 0.01;
    b.kernel.post.r = 0.01;
  }
  return b;
}

}  // namespace

ModelState ModelState::initial(const Dataset& dataset, const ModelSpec& spec) {
  ModelState s;
  s.rate = initial_block(dataset, spec);
  s.zero = initial_block(dataset, spec);
  s.ou.theta = 1.0;
  s.g = 1.0;
  const int n = dataset.n_weeks();
  s.latent_lograte.resize(n);
  for (int i = 0; i < n; ++i) s.latent_lograte(i) = std::log(dataset.counts[i] + 0.5);
  s.zero_latents.assign(n, 0);
  return s;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double block_predictor(const RegressionBlock& block, const Dataset& dataset, int week,
                       std::optional<KernelFamily> kernel) {
  const int i = week - 1;
  double eta = block.beta(0);
  for (int j = 1; j < block.beta.size(); ++j) {
    if (block.gamma[j - 1]) eta += block.beta(j) * dataset.design(i, j);
  }
  eta += block.random_effects(dataset.years[i] - 1);
  if (week >= 2) {
    const int y_prev = dataset.counts[i - 1];
    eta += block.ar_coef * y_prev;
    if (kernel) {
      eta += block.kernel_coef *
             aggregate_kernel(dataset.distances, week, KernelSpec{*kernel}, block.kernel, dataset.counts[i], y_prev);
    }
  }
  return eta;
}

double rate_predictor(const ModelState& state, const Dataset& dataset, int week, std::optional<KernelFamily> kernel) {
  return block_predictor(state.rate, dataset, week, kernel);
}

double zero_predictor(const ModelState& state, const Dataset& dataset, int week, std::optional<KernelFamily> kernel) {
  return block_predictor(state.zero, dataset, week, kernel);
}

double zip_loglik_point(int y, double theta, double p) {
  if (!(theta > 0.0)) throw ValidationError("Poisson rate must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("zero-inflation probability must lie in [0, 1)");
  if (y < 0) return -std::numeric_limits<double>::infinity();
  if (y == 0) {
    if (p == 0.0) return -theta;
    return std::log(p + (1.0 - p) * std::exp(-theta));
  }
  return std::log1p(-p) + y * std::log(theta) - theta - std::lgamma(y + 1.0);
}

double zip_loglik_logscale(int y, double log_theta, double logit_p) {
  if (y < 0) return -std::numeric_limits<double>::infinity();
  const double theta = std::exp(log_theta);
  // log(1 - p) = -log(1 + e^eta)
  const double log1m_p = logit_p > 0.0 ? -logit_p - std::log1p(std::exp(-logit_p)) : -std::log1p(std::exp(logit_p));
  if (y == 0) {
    if (logit_p == -std::numeric_limits<double>::infinity()) return -theta;
    // log(p + (1-p) e^-theta) = log1m_p + log(e^eta + e^-theta)
    const double a = logit_p, b = -theta;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return log1m_p + hi + std::log1p(std::exp(lo - hi));
  }
  return log1m_p + y * log_theta - theta - std::lgamma(y + 1.0);
}

double observation_loglik(const ModelState& state, const Dataset& dataset, const ModelSpec& spec) {
  double ll = 0.0;
  const double no_zero = -std::numeric_limits<double>::infinity();
  for (int week = 1; week <= dataset.n_weeks(); ++week) {
    const double eta = spec.zero_inflated ? zero_predictor(state, dataset, week, spec.kernel) : no_zero;
    ll += zip_loglik_logscale(dataset.counts[week - 1], state.latent_lograte(week - 1), eta);
  }
  return ll;
}

double total_loglik(const ModelState& state, const Dataset& dataset, const ModelSpec& spec) {
  double ll = observation_loglik(state, dataset, spec);
  const double phi = state.ou.phi();
  for (int week = 2; week <= dataset.n_weeks(); ++week) {
    const double mu = rate_predictor(state, dataset, week, spec.kernel);
    ll += ou_logpdf(state.latent_lograte(week - 1), mu, state.latent_lograte(week - 2), phi);
  }
  return ll;
}

double deviance(const ModelState& state, const Dataset& dataset, const ModelSpec& spec) {
  return -2.0 * observation_loglik(state, dataset, spec);
}

Eigen::MatrixXd covariate_crossproduct(const Dataset& dataset) {
  const auto x = dataset.design.rightCols(dataset.n_covariates());
  return x.transpose() * x;
}

}  // namespace epikernel
