#include "epikernel/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "epikernel/error.hpp"
#include "epikernel/rng.hpp"

namespace epikernel {

namespace {

constexpr double kMaxCondition = 1e12;

std::vector<int> selected(std::span<const std::uint8_t> gamma) {
  std::vector<int> idx;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (gamma[j]) idx.push_back(static_cast<int>(j));
  }
  return idx;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& xtx, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = xtx(idx[a], idx[b]);
  }
  return sub;
}

/// log det of the selected block; throws on near-singularity.
double selected_logdet(const Eigen::MatrixXd& xtx, const std::vector<int>& idx,
                       std::span<const std::string> names) {
  if (idx.empty()) return 0.0;
  const auto sub = submatrix(xtx, idx);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    std::string cols;
    const Eigen::VectorXd v = eig.eigenvectors().col(0);
    for (Eigen::Index a = 0; a < v.size(); ++a) {
      if (std::abs(v(a)) > 0.1) {
        if (!cols.empty()) cols += ", ";
        const auto j = static_cast<std::size_t>(idx[a]);
        cols += j < names.size() ? names[j] : "x" + std::to_string(j + 1);
      }
    }
    throw NumericError("X'X is singular on the selected covariates; collinear columns: " + cols);
  }
  // Pivoted Cholesky for the determinant itself.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sub);
  return ldlt.vectorD().array().log().sum();
}

double quad_form(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& beta, const std::vector<int>& idx) {
  double q = 0.0;
  for (int a : idx) {
    for (int b : idx) q += beta(a) * xtx(a, b) * beta(b);
  }
  return q;
}

double gaussian_from_logdet(double logdet_xtx, double quad, double k, double scale) {
  // precision = X'X_gg / scale
  return -0.5 * k * std::log(2.0 * std::numbers::pi) + 0.5 * (logdet_xtx - k * std::log(scale)) -
         0.5 * quad / scale;
}

}  // namespace

PriorFamily parse_prior_family(const std::string& name) {
  if (name == "hyper-g" || name == "hyper_g") return PriorFamily::hyper_g;
  if (name == "hyper-g-n" || name == "hyper_g_n" || name == "hyper-g/n") return PriorFamily::hyper_g_n;
  if (name == "zg-n" || name == "zg_n") return PriorFamily::zg_n;
  if (name == "zg-p2" || name == "zg_p2") return PriorFamily::zg_p2;
  if (name == "eiu") return PriorFamily::eiu;
  if (name == "flat") return PriorFamily::flat;
  throw ValidationError("unknown prior '" + name + "' (expected hyper-g, hyper-g-n, zg-n, zg-p2, eiu)");
}

std::string to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::hyper_g: return "hyper-g";
    case PriorFamily::hyper_g_n: return "hyper-g-n";
    case PriorFamily::zg_n: return "zg-n";
    case PriorFamily::zg_p2: return "zg-p2";
    case PriorFamily::eiu: return "eiu";
    case PriorFamily::flat: return "flat";
  }
  return "?";
}

ModelSpacePrior parse_model_space(const std::string& name) {
  if (name == "uniform") return ModelSpacePrior::uniform;
  if (name == "beta-binomial" || name == "beta_binomial") return ModelSpacePrior::beta_binomial;
  throw ValidationError("unknown model-space prior '" + name + "' (expected uniform or beta-binomial)");
}

std::string to_string(ModelSpacePrior prior) {
  return prior == ModelSpacePrior::uniform ? "uniform" : "beta-binomial";
}

void PriorConfig::validate(int p) const {
  if (has_random_g() && !(alpha > 2.0 && alpha <= 4.0)) {
    throw ValidationError("alpha must lie in (2, 4]; got " + std::to_string(alpha));
  }
  if (exp_sign != 1 && exp_sign != -1) throw ValidationError("exp_sign must be +1 or -1");
  if (!(beta0_var > 0.0) || !(coef_var > 0.0)) throw ValidationError("prior variances must be positive");
  if (!(sigma_upper > 0.0)) throw ValidationError("sigma_upper must be positive");
  if (family == PriorFamily::eiu) {
    if (eiu_rate_var.size() != static_cast<std::size_t>(p) || eiu_zero_var.size() != static_cast<std::size_t>(p)) {
      throw ConfigError("EIU prior requires a completed full-model fit (prior variances for all covariates)");
    }
    for (double v : eiu_rate_var) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("EIU prior variance must be positive");
    }
    for (double v : eiu_zero_var) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("EIU prior variance must be positive");
    }
  }
}

void PriorConfig::use_code_conventions() {
  exp_sign = -1;
  beta0_var = 100.0;
  coef_var = 100.0;
  sigma_prior = SigmaPrior::gamma_precision;
}

double normal_logpdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + z * z / var);
}

double gprior_logdensity(const Eigen::VectorXd& beta_rest, std::span<const std::uint8_t> gamma, double beta0,
                         double g, const Eigen::MatrixXd& xtx, int exp_sign, std::span<const std::string> names) {
  if (static_cast<std::size_t>(beta_rest.size()) != gamma.size() || xtx.rows() != beta_rest.size() ||
      xtx.cols() != beta_rest.size()) {
    throw DimensionError("g-prior dimensions disagree");
  }
  if (!(g > 0.0)) throw ValidationError("g must be positive");
  const auto idx = selected(gamma);
  const double scale = g * std::exp(exp_sign * beta0);
  const double logdet = selected_logdet(xtx, idx, names);
  return gaussian_from_logdet(logdet, quad_form(xtx, beta_rest, idx), static_cast<double>(idx.size()), scale);
}

GPrior::GPrior(Eigen::MatrixXd xtx, std::vector<std::string> names)
    : xtx_(std::move(xtx)), names_(std::move(names)) {
  if (xtx_.rows() > 20) throw ConfigError("at most 20 selectable covariates are supported");
  cache_.resize(std::size_t{1} << xtx_.rows());
}

const GPrior::Entry& GPrior::entry(std::span<const std::uint8_t> gamma) const {
  std::size_t key = 0;
  for (std::size_t j = 0; j < gamma.size(); ++j) key |= static_cast<std::size_t>(gamma[j] != 0) << j;
  auto& e = cache_[key];
  if (!e.ready) {
    e.logdet = selected_logdet(xtx_, selected(gamma), names_);
    e.ready = true;
  }
  return e;
}

double GPrior::logdensity(const Eigen::VectorXd& beta_rest, std::span<const std::uint8_t> gamma,
                          double scale) const {
  const auto& e = entry(gamma);
  const auto idx = selected(gamma);
  return gaussian_from_logdet(e.logdet, quad_form(xtx_, beta_rest, idx), static_cast<double>(idx.size()), scale);
}

double GPrior::pseudo_logdensity(double beta_j, int j, double scale) const {
  return normal_logpdf(beta_j, 0.0, scale / xtx_(j, j));
}

double shrinkage_logprior(double g, double alpha, PriorFamily variant, int n) {
  if (!(alpha > 2.0 && alpha <= 4.0)) throw ValidationError("alpha must lie in (2, 4]");
  if (!(g > 0.0)) return -std::numeric_limits<double>::infinity();
  const double b = alpha / 2.0 - 1.0;
  switch (variant) {
    case PriorFamily::hyper_g:
      // u = g/(1+g): b (1-u)^(b-1) * (1+g)^-2 = b (1+g)^-(b+1)
      return std::log(b) - (alpha / 2.0) * std::log1p(g);
    case PriorFamily::hyper_g_n: {
      if (n < 1) throw ValidationError("n must be positive for hyper-g/n");
      const double nn = static_cast<double>(n);
      return std::log(b) - (alpha / 2.0) * std::log1p(g / nn) - std::log(nn);
    }
    default:
      throw ValidationError("shrinkage prior applies only to hyper-g and hyper-g/n");
  }
}

double sample_shrinkage_g(double alpha, PriorFamily variant, int n, Rng& rng) {
  if (!(alpha > 2.0 && alpha <= 4.0)) throw ValidationError("alpha must lie in (2, 4]");
  const double u = rng.beta(1.0, alpha / 2.0 - 1.0);
  const double ratio = u / (1.0 - u);
  return variant == PriorFamily::hyper_g_n ? ratio * n : ratio;
}

double fixed_g(PriorFamily variant, int n, int p) {
  if (n < 1 || p < 1) throw ValidationError("fixed g requires n >= 1 and p >= 1");
  if (variant == PriorFamily::zg_n) return static_cast<double>(n);
  if (variant == PriorFamily::zg_p2) return static_cast<double>(p) * static_cast<double>(p);
  throw ValidationError("fixed g is defined only for zg-n and zg-p2");
}

std::vector<double> eiu_prior(std::span<const double> sd_full_model, int n) {
  if (sd_full_model.empty()) throw ConfigError("EIU prior requires a completed full-model fit");
  if (n < 1) throw ValidationError("n must be positive");
  std::vector<double> var;
  var.reserve(sd_full_model.size());
  for (double sd : sd_full_model) {
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw ValidationError("EIU prior needs positive full-model posterior sd (degenerate component)");
    }
    var.push_back(static_cast<double>(n) * sd * sd);
  }
  return var;
}

double model_space_logprior(std::span<const std::uint8_t> gamma, ModelSpacePrior prior) {
  const double p = static_cast<double>(gamma.size());
  if (prior == ModelSpacePrior::uniform) return -p * std::numbers::ln2;
  double k = 0.0;
  for (auto v : gamma) k += v != 0;
  // log B(1+k, 1+p-k) - log B(1,1)
  return std::lgamma(1.0 + k) + std::lgamma(1.0 + p - k) - std::lgamma(2.0 + p);
}

}  // namespace epikernel
