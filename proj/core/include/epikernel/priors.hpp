#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epikernel {

enum class PriorFamily { hyper_g, hyper_g_n, zg_n, zg_p2, eiu, flat };
enum class ModelSpacePrior { uniform, beta_binomial };
enum class SigmaPrior { uniform_sd, gamma_precision };

PriorFamily parse_prior_family(const std::string& name);
std::string to_string(PriorFamily family);
ModelSpacePrior parse_model_space(const std::string& name);
std::string to_string(ModelSpacePrior prior);

/// Everything that shapes the prior. `use_code_conventions()` switches to the
/// alternative set: covariance sign -1, variances 100 and a Gamma(0.1, 0.1)
/// precision prior on the random effects.
struct PriorConfig {
  PriorFamily family = PriorFamily::hyper_g;
  double alpha = 4.0;
  ModelSpacePrior model_space = ModelSpacePrior::uniform;
  /// +1: covariance g e^{beta0} (X'X)^-1;  -1: g e^{-beta0} (X'X)^-1.
  int exp_sign = +1;
  double beta0_var = 1e4;
  /// Variance of the normal priors on the lag and kernel coefficients and on
  /// the kernel parameters.
  double coef_var = 1e4;
  SigmaPrior sigma_prior = SigmaPrior::uniform_sd;
  double sigma_upper = 100.0;
  /// Per-covariate prior variances n * sd^2 for the EIU family.
  std::vector<double> eiu_rate_var;
  std::vector<double> eiu_zero_var;

  bool has_random_g() const { return family == PriorFamily::hyper_g || family == PriorFamily::hyper_g_n; }
  bool is_g_prior() const { return family != PriorFamily::eiu && family != PriorFamily::flat; }
  /// Throws ValidationError on out-of-range settings.
  void validate(int p) const;
  void use_code_conventions();
};

double normal_logpdf(double x, double mean, double var);

/// Multivariate normal log-density N(0, g e^{sign*beta0} (X'X_gg)^-1) of the
/// gamma-selected coefficients. `beta_rest` excludes the intercept and
/// `xtx` is the full p x p cross-product of the centered covariates.
/// Throws NumericError naming the columns if the selected block is
/// numerically singular (condition number above 1e12).
double gprior_logdensity(const Eigen::VectorXd& beta_rest, std::span<const std::uint8_t> gamma, double beta0,
                         double g, const Eigen::MatrixXd& xtx, int exp_sign = +1,
                         std::span<const std::string> names = {});

/// Same density with the per-pattern factorization cached. One instance per
/// chain; not thread-safe.
class GPrior {
 public:
  GPrior(Eigen::MatrixXd xtx, std::vector<std::string> names);

  /// `scale` is g e^{sign*beta0}.
  double logdensity(const Eigen::VectorXd& beta_rest, std::span<const std::uint8_t> gamma, double scale) const;
  /// Pseudo-prior for an excluded coefficient: N(0, scale / X'X_jj).
  double pseudo_logdensity(double beta_j, int j, double scale) const;
  const Eigen::MatrixXd& xtx() const { return xtx_; }

 private:
  struct Entry {
    bool ready = false;
    double logdet = 0.0;
  };
  const Entry& entry(std::span<const std::uint8_t> gamma) const;

  Eigen::MatrixXd xtx_;
  std::vector<std::string> names_;
  mutable std::vector<Entry> cache_;
};

/// log p(g) induced by g/(1+g) ~ Beta(1, alpha/2 - 1) for hyper-g, or the
/// same law on g/n for hyper-g/n. Includes the Jacobian.
double shrinkage_logprior(double g, double alpha, PriorFamily variant, int n);

/// Draws g from the shrinkage prior (used by tests and prior checks).
double sample_shrinkage_g(double alpha, PriorFamily variant, int n, class Rng& rng);

/// g = n for ZG(n), g = p^2 for ZG(p^2).
double fixed_g(PriorFamily variant, int n, int p);

/// Independent N(0, n sd_j^2) prior variances from a full-model fit.
std::vector<double> eiu_prior(std::span<const double> sd_full_model, int n);

double model_space_logprior(std::span<const std::uint8_t> gamma, ModelSpacePrior prior);

}  // namespace epikernel
