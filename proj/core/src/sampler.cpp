#include "epikernel/sampler.hpp"

#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "epikernel/error.hpp"
#include "epikernel/rng.hpp"

namespace epikernel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Prior variance of theta = log phi.
constexpr double kThetaVar = 100.0;
constexpr double kLog2Pi = 1.8378770664093454836;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct Tuner {
  std::string name;
  double log_step = std::log(0.1);
  bool adaptive = true;
  long proposed = 0;
  long accepted = 0;
  double log_step_frozen = 0.0;
};

class Chain {
 public:
  Chain(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec, const McmcConfig& config,
        std::uint64_t seed, bool validate_start = true);

  void set_state(const ModelState& state) {
    s_ = state;
    resync();
  }
  const ModelState& state() const { return s_; }
  double log_posterior() const;
  double deviance() const;
  void sweep();
  void stop_adaptation();
  std::vector<AcceptanceEntry> ledger() const;

 private:
  using Vec = std::vector<double>;

  bool frozen(const char* block) const { return config_.frozen.count(block) != 0; }
  bool zi() const { return spec_.zero_inflated; }

  Tuner& tuner(const std::string& name, double initial_step = 0.1, bool adaptive = true);
  double step(const Tuner& t) const { return std::exp(t.log_step); }
  bool metropolis(Tuner& t, double log_ratio);

  double obs(int i, double lambda, double eta) const;
  double ou_sum(const Vec& mu, const Eigen::VectorXd& lat, double phi) const;
  void kernel_terms(const RegressionBlock& b, Vec& out) const;
  void predictor(const RegressionBlock& b, const Vec& kern, Vec& out) const;

  double coef_prior(const RegressionBlock& b, bool zero_block, double scale) const;
  double kernel_prior(const ChangePoint& cp) const;
  double sigma_prior(double sigma) const;
  double block_prior(const RegressionBlock& b, bool zero_block, double scale) const;
  double total_prior(const RegressionBlock& rate, const RegressionBlock& zero, double g, double theta) const;
  double scale(double beta0_rate, double g) const {
    return prior_.is_g_prior() ? g * std::exp(prior_.exp_sign * beta0_rate) : 1.0;
  }

  void resync();
  std::string dump() const;

  // Proposal for one block. `modify` edits the candidate and returns the log
  // Jacobian of the move; `kernel` requests recomputing the kernel terms;
  // `shift` translates the latent path with the rate predictor.
  template <class Modify>
  void rate_move(Tuner& t, Modify modify, bool kernel, bool shift);
  template <class Modify>
  void zero_move(Tuner& t, Modify modify, bool kernel);

  void update_u();
  void update_rate_block();
  void update_zero_block();
  void update_gamma(bool zero_block);
  void update_phi();
  void update_kernel(bool zero_block);
  void update_t_change();
  void update_sigma(bool zero_block);
  void update_g();
  void update_latent();

  const Dataset& d_;
  const PriorConfig& prior_;
  const ModelSpec& spec_;
  const McmcConfig& config_;
  Rng rng_;
  std::optional<GPrior> gprior_;
  ModelState s_;
  int n_;
  int p_;
  double t_lo_ = 1.0;
  double t_hi_ = 1.0;
  bool adapting_ = true;
  Vec lgy_;
  Vec kr_, kz_, mu_, eta_, obs_;
  Vec k_buf_, p_buf_, o_buf_;
  Eigen::VectorXd lat_buf_;
  std::deque<Tuner> tuners_;
  std::unordered_map<std::string, std::size_t> tuner_index_;
};

Chain::Chain(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec, const McmcConfig& config,
             std::uint64_t seed, bool validate_start)
    : d_(dataset), prior_(prior), spec_(spec), config_(config), rng_(seed), n_(dataset.n_weeks()),
      p_(dataset.n_covariates()) {
  if (n_ < 1) throw DimensionError("dataset has no weeks");
  prior_.validate(p_);
  if (n_ >= 5) {
    t_lo_ = 3.0;
    t_hi_ = n_ - 1.0;
  } else {
    t_lo_ = 1.0;
    t_hi_ = n_;
  }
  lgy_.resize(n_);
  for (int i = 0; i < n_; ++i) lgy_[i] = std::lgamma(dataset.counts[i] + 1.0);
  if (prior_.is_g_prior() && p_ > 0) {
    gprior_.emplace(covariate_crossproduct(dataset), dataset.covariate_names);
    // Surfaces collinear columns before sampling starts; every selected
    // submatrix is at least as well conditioned as the full one.
    std::vector<std::uint8_t> all(p_, 1);
    gprior_->logdensity(Eigen::VectorXd::Zero(p_), all, 1.0);
  }

  s_ = config.initial ? *config.initial : ModelState::initial(dataset, spec);
  if (s_.rate.beta.size() != p_ + 1 || s_.zero.beta.size() != p_ + 1 ||
      s_.rate.random_effects.size() != dataset.n_years || s_.zero.random_effects.size() != dataset.n_years ||
      s_.latent_lograte.size() != n_) {
    throw DimensionError("initial state does not match the dataset dimensions");
  }
  s_.zero_latents.resize(n_, 0);
  if (prior_.family == PriorFamily::zg_n || prior_.family == PriorFamily::zg_p2) {
    s_.g = fixed_g(prior_.family, n_, p_);
  } else if (!prior_.has_random_g()) {
    s_.g = 1.0;
  }
  if (!spec_.kernel) {
    s_.rate.kernel_coef = 0.0;
    s_.zero.kernel_coef = 0.0;
  } else {
    const double t = std::min(std::max(s_.rate.kernel.t_change, t_lo_), t_hi_);
    s_.rate.kernel.t_change = t;
    s_.zero.kernel.t_change = t;
  }

  const Eigen::MatrixXd xtx = covariate_crossproduct(dataset);
  for (int j = 1; j <= p_; ++j) {
    const double info = xtx(j - 1, j - 1);
    const double initial = info > 0.0 ? 1.0 / std::sqrt(info) : 0.1;
    tuner("beta" + std::to_string(j), initial);
    tuner("z_beta" + std::to_string(j), initial);
  }
  resync();
  if (validate_start && !std::isfinite(log_posterior())) {
    throw NumericError("log posterior is not finite at the initial state\n" + dump());
  }
}

Tuner& Chain::tuner(const std::string& name, double initial_step, bool adaptive) {
  auto it = tuner_index_.find(name);
  if (it != tuner_index_.end()) return tuners_[it->second];
  tuner_index_.emplace(name, tuners_.size());
  Tuner t;
  t.name = name;
  t.log_step = std::log(initial_step);
  t.adaptive = adaptive;
  tuners_.push_back(t);
  return tuners_.back();
}

bool Chain::metropolis(Tuner& t, double log_ratio) {
  ++t.proposed;
  const bool accept = !std::isnan(log_ratio) && log_ratio != kNegInf && std::log(rng_.uniform()) < log_ratio;
  if (accept) ++t.accepted;
  if (adapting_ && t.adaptive) {
    const double gain = std::pow(static_cast<double>(t.proposed), -0.6);
    t.log_step += gain * ((accept ? 1.0 : 0.0) - config_.target_accept);
    t.log_step = std::min(std::max(t.log_step, -20.0), 5.0);
  }
  return accept;
}

void Chain::stop_adaptation() {
  adapting_ = false;
  for (auto& t : tuners_) t.log_step_frozen = t.log_step;
}

std::vector<AcceptanceEntry> Chain::ledger() const {
  std::vector<AcceptanceEntry> out;
  for (const auto& t : tuners_) {
    if (t.proposed == 0) continue;
    out.push_back({t.name, t.proposed, t.accepted, adapting_ ? t.log_step : t.log_step_frozen, t.log_step});
  }
  return out;
}

double Chain::obs(int i, double lambda, double eta) const {
  const int y = d_.counts[i];
  const double theta = std::exp(lambda);
  if (!zi()) return y * lambda - theta - lgy_[i];
  const double log1m_p = -softplus(eta);
  if (y == 0) return log1m_p + log_add_exp(eta, -theta);
  return log1m_p + y * lambda - theta - lgy_[i];
}

double Chain::ou_sum(const Vec& mu, const Eigen::VectorXd& lat, double phi) const {
  if (n_ < 2) return 0.0;
  const double e = std::exp(-phi);
  const double var = -std::expm1(-2.0 * phi) / (2.0 * phi);
  double quad = 0.0;
  double prev = mu[0];
  for (int i = 1; i < n_; ++i) {
    const double z = lat(i) - (mu[i] + (prev - mu[i]) * e);
    quad += z * z;
    prev = lat(i);
  }
  return -0.5 * ((n_ - 1) * (kLog2Pi + std::log(var)) + quad / var);
}

void Chain::kernel_terms(const RegressionBlock& b, Vec& out) const {
  out.assign(n_, 0.0);
  if (!spec_.kernel) return;
  const KernelSpec ks{*spec_.kernel};
  for (int week = 2; week <= n_; ++week) {
    out[week - 1] =
        aggregate_kernel(d_.distances, week, ks, b.kernel, d_.counts[week - 1], d_.counts[week - 2]);
  }
}

void Chain::predictor(const RegressionBlock& b, const Vec& kern, Vec& out) const {
  out.resize(n_);
  for (int i = 0; i < n_; ++i) {
    double eta = b.beta(0) + b.random_effects(d_.years[i] - 1);
    for (int j = 1; j <= p_; ++j) {
      if (b.gamma[j - 1]) eta += b.beta(j) * d_.design(i, j);
    }
    if (i > 0) eta += b.ar_coef * d_.counts[i - 1] + b.kernel_coef * kern[i];
    out[i] = eta;
  }
}

double Chain::coef_prior(const RegressionBlock& b, bool zero_block, double sc) const {
  if (p_ == 0) return 0.0;
  double lp = 0.0;
  switch (prior_.family) {
    case PriorFamily::eiu: {
      const auto& var = zero_block ? prior_.eiu_zero_var : prior_.eiu_rate_var;
      for (int j = 0; j < p_; ++j) lp += normal_logpdf(b.beta(j + 1), 0.0, var[j]);
      break;
    }
    case PriorFamily::flat:
      for (int j = 0; j < p_; ++j) lp += normal_logpdf(b.beta(j + 1), 0.0, prior_.coef_var);
      break;
    default: {
      const Eigen::VectorXd rest = b.beta.tail(p_);
      lp += gprior_->logdensity(rest, b.gamma, sc);
      for (int j = 0; j < p_; ++j) {
        if (!b.gamma[j]) lp += gprior_->pseudo_logdensity(rest(j), j, sc);
      }
    }
  }
  return lp + model_space_logprior(b.gamma, prior_.model_space);
}

double Chain::kernel_prior(const ChangePoint& cp) const {
  if (!spec_.kernel) return 0.0;
  const auto family = *spec_.kernel;
  double lp = 0.0;
  for (const auto* k : {&cp.pre, &cp.post}) {
    if (!(k->a > 0.0)) return kNegInf;
    lp += normal_logpdf(k->a, 0.0, prior_.coef_var);
    if (uses_shape(family)) lp += normal_logpdf(k->c, 0.0, prior_.coef_var);
    if (family == KernelFamily::C) {
      if (!k->r || !(*k->r >= 0.0)) return kNegInf;
      lp += normal_logpdf(*k->r, 0.0, prior_.coef_var);
    }
  }
  return lp;
}

double Chain::sigma_prior(double sigma) const {
  if (!(sigma > 0.0)) return kNegInf;
  if (prior_.sigma_prior == SigmaPrior::uniform_sd) {
    return sigma <= prior_.sigma_upper ? -std::log(prior_.sigma_upper) : kNegInf;
  }
  // tau = sigma^-2 ~ Gamma(0.1, rate 0.1), carried to sigma.
  const double a = 0.1, b = 0.1;
  const double tau = 1.0 / (sigma * sigma);
  return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(tau) - b * tau + std::numbers::ln2 -
         3.0 * std::log(sigma);
}

double Chain::block_prior(const RegressionBlock& b, bool zero_block, double sc) const {
  double lp = normal_logpdf(b.beta(0), 0.0, prior_.beta0_var) + coef_prior(b, zero_block, sc);
  lp += normal_logpdf(b.ar_coef, 0.0, prior_.coef_var);
  if (spec_.kernel) lp += normal_logpdf(b.kernel_coef, 0.0, prior_.coef_var) + kernel_prior(b.kernel);
  const double var = b.sigma_b * b.sigma_b;
  for (int y = 0; y < b.random_effects.size(); ++y) lp += normal_logpdf(b.random_effects(y), 0.0, var);
  return lp + sigma_prior(b.sigma_b);
}

double Chain::total_prior(const RegressionBlock& rate, const RegressionBlock& zero, double g, double theta) const {
  const double sc = scale(rate.beta(0), g);
  double lp = block_prior(rate, false, sc);
  if (zi()) lp += block_prior(zero, true, sc);
  lp += normal_logpdf(theta, 0.0, kThetaVar);
  if (prior_.has_random_g()) lp += shrinkage_logprior(g, prior_.alpha, prior_.family, n_);
  if (spec_.kernel) {
    const double t = rate.kernel.t_change;
    if (!(t >= t_lo_ && t <= t_hi_)) return kNegInf;
    lp -= std::log(t_hi_ - t_lo_);
  }
  return lp;
}

void Chain::resync() {
  kernel_terms(s_.rate, kr_);
  predictor(s_.rate, kr_, mu_);
  if (zi()) {
    kernel_terms(s_.zero, kz_);
    predictor(s_.zero, kz_, eta_);
  } else {
    kz_.assign(n_, 0.0);
    eta_.assign(n_, kNegInf);
  }
  s_.latent_lograte(0) = mu_[0];
  obs_.resize(n_);
  for (int i = 0; i < n_; ++i) obs_[i] = obs(i, s_.latent_lograte(i), eta_[i]);
}

double Chain::log_posterior() const {
  double lp = 0.0;
  for (double o : obs_) lp += o;
  lp += ou_sum(mu_, s_.latent_lograte, s_.ou.phi());
  return lp + total_prior(s_.rate, s_.zero, s_.g, s_.ou.theta);
}

double Chain::deviance() const {
  double ll = 0.0;
  for (double o : obs_) ll += o;
  return -2.0 * ll;
}

std::string Chain::dump() const {
  std::ostringstream os;
  os.precision(17);
  auto block = [&](const char* name, const RegressionBlock& b) {
    os << name << ": beta=[" << b.beta.transpose() << "] gamma=[";
    for (auto v : b.gamma) os << int(v);
    os << "] ar=" << b.ar_coef << " kernel_coef=" << b.kernel_coef << " b=[" << b.random_effects.transpose()
       << "] sigma_b=" << b.sigma_b << " t_change=" << b.kernel.t_change << " pre=(" << b.kernel.pre.a << ","
       << b.kernel.pre.c << ") post=(" << b.kernel.post.a << "," << b.kernel.post.c << ")\n";
  };
  block("rate", s_.rate);
  block("zero", s_.zero);
  os << "phi=" << s_.ou.phi() << " g=" << s_.g << '\n';
  return os.str();
}

template <class Modify>
void Chain::rate_move(Tuner& t, Modify modify, bool kernel, bool shift) {
  RegressionBlock nb = s_.rate;
  const double log_jac = modify(nb, step(t));
  const Vec* kern = &kr_;
  if (kernel) {
    kernel_terms(nb, k_buf_);
    kern = &k_buf_;
  }
  predictor(nb, *kern, p_buf_);
  const double phi = s_.ou.phi();
  double log_ratio = log_jac + total_prior(nb, s_.zero, s_.g, s_.ou.theta) -
                     total_prior(s_.rate, s_.zero, s_.g, s_.ou.theta);
  if (shift) {
    lat_buf_ = s_.latent_lograte;
    for (int i = 0; i < n_; ++i) lat_buf_(i) += p_buf_[i] - mu_[i];
    o_buf_.resize(n_);
    double delta_obs = 0.0;
    for (int i = 0; i < n_; ++i) {
      o_buf_[i] = obs(i, lat_buf_(i), eta_[i]);
      delta_obs += o_buf_[i] - obs_[i];
    }
    log_ratio += delta_obs + ou_sum(p_buf_, lat_buf_, phi) - ou_sum(mu_, s_.latent_lograte, phi);
    if (metropolis(t, log_ratio)) {
      s_.rate = std::move(nb);
      mu_.swap(p_buf_);
      if (kernel) kr_.swap(k_buf_);
      s_.latent_lograte.swap(lat_buf_);
      obs_.swap(o_buf_);
    }
    return;
  }
  const double new_obs0 = obs(0, p_buf_[0], eta_[0]);
  log_ratio += new_obs0 - obs_[0] + ou_sum(p_buf_, s_.latent_lograte, phi) - ou_sum(mu_, s_.latent_lograte, phi);
  if (metropolis(t, log_ratio)) {
    s_.rate = std::move(nb);
    mu_.swap(p_buf_);
    if (kernel) kr_.swap(k_buf_);
    s_.latent_lograte(0) = mu_[0];
    obs_[0] = new_obs0;
  }
}

template <class Modify>
void Chain::zero_move(Tuner& t, Modify modify, bool kernel) {
  RegressionBlock nb = s_.zero;
  const double log_jac = modify(nb, step(t));
  const Vec* kern = &kz_;
  if (kernel) {
    kernel_terms(nb, k_buf_);
    kern = &k_buf_;
  }
  predictor(nb, *kern, p_buf_);
  o_buf_.resize(n_);
  double log_ratio = log_jac + total_prior(s_.rate, nb, s_.g, s_.ou.theta) -
                     total_prior(s_.rate, s_.zero, s_.g, s_.ou.theta);
  for (int i = 0; i < n_; ++i) {
    o_buf_[i] = obs(i, s_.latent_lograte(i), p_buf_[i]);
    log_ratio += o_buf_[i] - obs_[i];
  }
  if (metropolis(t, log_ratio)) {
    s_.zero = std::move(nb);
    eta_.swap(p_buf_);
    if (kernel) kz_.swap(k_buf_);
    obs_.swap(o_buf_);
  }
}

void Chain::update_u() {
  for (int i = 0; i < n_; ++i) {
    if (!zi() || d_.counts[i] > 0) {
      s_.zero_latents[i] = 0;
      continue;
    }
    // p / (p + (1-p) e^-theta) = logistic(eta + theta)
    const double prob = logistic(eta_[i] + std::exp(s_.latent_lograte(i)));
    s_.zero_latents[i] = rng_.bernoulli(prob) ? 1 : 0;
  }
}

void Chain::update_rate_block() {
  for (bool shift : {false, true}) {
    if (shift && frozen("latent")) break;
    const std::string suffix = shift ? "_shift" : "";
    if (!frozen("beta")) {
      for (int j = 0; j <= p_; ++j) {
        if (j > 0 && !s_.rate.gamma[j - 1]) continue;
        const std::string name = "beta" + std::to_string(j);
        const double initial = std::exp(tuner(name).log_step);
        rate_move(tuner(name + suffix, initial), [&](RegressionBlock& b, double h) {
          b.beta(j) += h * rng_.normal();
          return 0.0;
        }, false, shift);
      }
    }
    if (!frozen("ar")) {
      rate_move(tuner("ar_coef" + suffix, 0.05), [&](RegressionBlock& b, double h) {
        b.ar_coef += h * rng_.normal();
        return 0.0;
      }, false, shift);
    }
    if (spec_.kernel && !frozen("kernel_coef")) {
      rate_move(tuner("kernel_coef" + suffix), [&](RegressionBlock& b, double h) {
        b.kernel_coef += h * rng_.normal();
        return 0.0;
      }, false, shift);
    }
    if (!frozen("random_effects")) {
      for (int y = 0; y < d_.n_years; ++y) {
        rate_move(tuner("b" + std::to_string(y + 1) + suffix), [&](RegressionBlock& b, double h) {
          b.random_effects(y) += h * rng_.normal();
          return 0.0;
        }, false, shift);
      }
    }
  }
}

void Chain::update_zero_block() {
  if (!zi()) return;
  if (!frozen("zero_beta")) {
    zero_move(tuner("z_beta0"), [&](RegressionBlock& b, double h) {
      b.beta(0) += h * rng_.normal();
      return 0.0;
    }, false);
    for (int j = 1; j <= p_; ++j) {
      if (!s_.zero.gamma[j - 1]) continue;
      zero_move(tuner("z_beta" + std::to_string(j)), [&](RegressionBlock& b, double h) {
        b.beta(j) += h * rng_.normal();
        return 0.0;
      }, false);
    }
  }
  if (!frozen("ar")) {
    zero_move(tuner("z_ar_coef", 0.05), [&](RegressionBlock& b, double h) {
      b.ar_coef += h * rng_.normal();
      return 0.0;
    }, false);
  }
  if (spec_.kernel && !frozen("kernel_coef")) {
    zero_move(tuner("z_kernel_coef"), [&](RegressionBlock& b, double h) {
      b.kernel_coef += h * rng_.normal();
      return 0.0;
    }, false);
  }
  if (!frozen("random_effects")) {
    for (int y = 0; y < d_.n_years; ++y) {
      zero_move(tuner("z_b" + std::to_string(y + 1)), [&](RegressionBlock& b, double h) {
        b.random_effects(y) += h * rng_.normal();
        return 0.0;
      }, false);
    }
  }
}

// Excluded coefficients do not touch the likelihood, so they are drawn
// straight from their pseudo-prior.
void draw_excluded(RegressionBlock& b, const std::optional<GPrior>& gp, const PriorConfig& prior, bool zero_block,
                   double sc, Rng& rng) {
  const int p = static_cast<int>(b.gamma.size());
  for (int j = 0; j < p; ++j) {
    if (b.gamma[j]) continue;
    double var = prior.coef_var;
    if (prior.family == PriorFamily::eiu) {
      var = zero_block ? prior.eiu_zero_var[j] : prior.eiu_rate_var[j];
    } else if (prior.is_g_prior()) {
      var = sc / gp->xtx()(j, j);
    }
    b.beta(j + 1) = rng.normal(0.0, std::sqrt(var));
  }
}

void Chain::update_gamma(bool zero_block) {
  if (p_ == 0) return;
  if (zero_block && !zi()) return;
  Tuner& t = tuner(zero_block ? "z_gamma" : "gamma", 1.0, false);
  RegressionBlock& cur = zero_block ? s_.zero : s_.rate;
  const Vec& kern = zero_block ? kz_ : kr_;
  const double phi = s_.ou.phi();
  RegressionBlock cand = cur;
  Vec pred[2];
  double lp[2];
  Vec obs_new;
  for (int j = 0; j < p_; ++j) {
    for (int v = 0; v < 2; ++v) {
      cand.gamma[j] = static_cast<std::uint8_t>(v);
      predictor(cand, kern, pred[v]);
      double ll;
      if (zero_block) {
        ll = 0.0;
        for (int i = 0; i < n_; ++i) ll += obs(i, s_.latent_lograte(i), pred[v][i]);
        lp[v] = ll + total_prior(s_.rate, cand, s_.g, s_.ou.theta);
      } else {
        ll = obs(0, pred[v][0], eta_[0]) + ou_sum(pred[v], s_.latent_lograte, phi);
        lp[v] = ll + total_prior(cand, s_.zero, s_.g, s_.ou.theta);
      }
    }
    const int old = cur.gamma[j];
    const double prob1 = logistic(lp[1] - lp[0]);
    const int v = std::isnan(prob1) ? old : (rng_.bernoulli(prob1) ? 1 : 0);
    cand.gamma[j] = static_cast<std::uint8_t>(v);
    ++t.proposed;
    if (v != old) ++t.accepted;
    cur.gamma[j] = cand.gamma[j];
    if (zero_block) {
      eta_ = pred[v];
      for (int i = 0; i < n_; ++i) obs_[i] = obs(i, s_.latent_lograte(i), eta_[i]);
    } else {
      mu_ = pred[v];
      s_.latent_lograte(0) = mu_[0];
      obs_[0] = obs(0, mu_[0], eta_[0]);
    }
  }
}

void Chain::update_phi() {
  Tuner& t = tuner("phi", 0.2);
  const double theta_new = s_.ou.theta + step(t) * rng_.normal();
  const double log_ratio = ou_sum(mu_, s_.latent_lograte, std::exp(theta_new)) -
                           ou_sum(mu_, s_.latent_lograte, s_.ou.phi()) +
                           normal_logpdf(theta_new, 0.0, kThetaVar) - normal_logpdf(s_.ou.theta, 0.0, kThetaVar);
  if (metropolis(t, log_ratio)) s_.ou.theta = theta_new;
}

void Chain::update_kernel(bool zero_block) {
  if (!spec_.kernel) return;
  if (zero_block && !zi()) return;
  const auto family = *spec_.kernel;
  const std::string prefix = zero_block ? "z_" : "";
  for (Regime regime : {Regime::pre, Regime::post}) {
    const std::string tag = prefix + (regime == Regime::pre ? "kpre_" : "kpost_");
    auto log_move = [&, regime](auto member) {
      return [&, regime, member](RegressionBlock& b, double h) {
        auto& k = b.kernel.params(regime);
        double& x = member(k);
        const double z = h * rng_.normal();
        x *= std::exp(z);
        return z;
      };
    };
    auto move_a = log_move([](KernelParams& k) -> double& { return k.a; });
    auto move_c = [&, regime](RegressionBlock& b, double h) {
      b.kernel.params(regime).c += h * rng_.normal();
      return 0.0;
    };
    auto move_r = log_move([](KernelParams& k) -> double& { return *k.r; });
    if (zero_block) {
      zero_move(tuner(tag + "a", 0.2), move_a, true);
      if (uses_shape(family)) zero_move(tuner(tag + "c", 0.2), move_c, true);
      if (family == KernelFamily::C) zero_move(tuner(tag + "r", 0.2), move_r, true);
    } else {
      rate_move(tuner(tag + "a", 0.2), move_a, true, false);
      if (uses_shape(family)) rate_move(tuner(tag + "c", 0.2), move_c, true, false);
      if (family == KernelFamily::C) rate_move(tuner(tag + "r", 0.2), move_r, true, false);
    }
  }
}

void Chain::update_t_change() {
  if (!spec_.kernel) return;
  const bool draw = rng_.bernoulli(0.5);
  Tuner& t = draw ? tuner("t_change_draw", 1.0, false) : tuner("t_change", 5.0);
  const double t_new = draw ? t_lo_ + (t_hi_ - t_lo_) * rng_.uniform() : s_.rate.kernel.t_change + step(t) * rng_.normal();
  if (!(t_new >= t_lo_ && t_new <= t_hi_)) {
    metropolis(t, kNegInf);
    return;
  }
  RegressionBlock nr = s_.rate, nz = s_.zero;
  nr.kernel.t_change = t_new;
  nz.kernel.t_change = t_new;
  Vec kr, kz, mu, eta;
  kernel_terms(nr, kr);
  predictor(nr, kr, mu);
  if (zi()) {
    kernel_terms(nz, kz);
    predictor(nz, kz, eta);
  } else {
    kz.assign(n_, 0.0);
    eta.assign(n_, kNegInf);
  }
  Vec o(n_);
  double log_ratio = ou_sum(mu, s_.latent_lograte, s_.ou.phi()) - ou_sum(mu_, s_.latent_lograte, s_.ou.phi());
  for (int i = 0; i < n_; ++i) {
    o[i] = obs(i, i == 0 ? mu[0] : s_.latent_lograte(i), eta[i]);
    log_ratio += o[i] - obs_[i];
  }
  if (metropolis(t, log_ratio)) {
    s_.rate = std::move(nr);
    s_.zero = std::move(nz);
    kr_.swap(kr);
    kz_.swap(kz);
    mu_.swap(mu);
    eta_.swap(eta);
    obs_.swap(o);
    s_.latent_lograte(0) = mu_[0];
  }
}

void Chain::update_sigma(bool zero_block) {
  if (zero_block && !zi()) return;
  RegressionBlock& b = zero_block ? s_.zero : s_.rate;
  const int years = static_cast<int>(b.random_effects.size());
  if (prior_.sigma_prior == SigmaPrior::gamma_precision) {
    const double shape = 0.1 + 0.5 * years;
    const double rate = 0.1 + 0.5 * b.random_effects.squaredNorm();
    b.sigma_b = 1.0 / std::sqrt(rng_.gamma(shape) / rate);
    return;
  }
  Tuner& t = tuner(zero_block ? "z_sigma_b" : "sigma_b", 0.3);
  const double z = step(t) * rng_.normal();
  const double s_new = b.sigma_b * std::exp(z);
  double log_ratio = z + sigma_prior(s_new) - sigma_prior(b.sigma_b);
  for (int y = 0; y < years; ++y) {
    log_ratio += normal_logpdf(b.random_effects(y), 0.0, s_new * s_new) -
                 normal_logpdf(b.random_effects(y), 0.0, b.sigma_b * b.sigma_b);
  }
  if (metropolis(t, log_ratio)) b.sigma_b = s_new;
}

void Chain::update_g() {
  if (!prior_.has_random_g()) return;
  Tuner& t = tuner("g", 0.5);
  const double z = step(t) * rng_.normal();
  const double g_new = s_.g * std::exp(z);
  const double log_ratio = z + total_prior(s_.rate, s_.zero, g_new, s_.ou.theta) -
                           total_prior(s_.rate, s_.zero, s_.g, s_.ou.theta);
  if (metropolis(t, log_ratio)) s_.g = g_new;
}

void Chain::update_latent() {
  if (n_ < 2) return;
  Tuner& bridge = tuner("latent_bridge", 1.0, false);
  Tuner& walk = tuner("latent_rw", 0.3);
  const double phi = s_.ou.phi();
  const double e = std::exp(-phi);
  const double var = -std::expm1(-2.0 * phi) / (2.0 * phi);
  auto& lat = s_.latent_lograte;
  auto ou = [&](double next, double mu, double prev) {
    const double z = next - (mu + (prev - mu) * e);
    return -0.5 * z * z / var;
  };
  for (int i = 1; i < n_; ++i) {
    const double prev = i == 1 ? mu_[0] : lat(i - 1);
    const bool last = i == n_ - 1;
    // The bridge is the exact product of the two transition densities, so
    // only the observation term enters the ratio.
    const OUMoments m = last ? OUMoments{mu_[i] + (prev - mu_[i]) * e, var}
                             : ou_bridge(prev, lat(i + 1), mu_[i], mu_[i + 1], phi);
    const double cand = m.mean + std::sqrt(m.var) * rng_.normal();
    const double o_cand = obs(i, cand, eta_[i]);
    if (metropolis(bridge, o_cand - obs_[i])) {
      lat(i) = cand;
      obs_[i] = o_cand;
    }
    auto local = [&](double x, double o) {
      double v = o + ou(x, mu_[i], prev);
      if (!last) v += ou(lat(i + 1), mu_[i + 1], x);
      return v;
    };
    const double rw = lat(i) + step(walk) * rng_.normal();
    const double o_rw = obs(i, rw, eta_[i]);
    if (metropolis(walk, local(rw, o_rw) - local(lat(i), obs_[i]))) {
      lat(i) = rw;
      obs_[i] = o_rw;
    }
  }
}

void Chain::sweep() {
  if (!frozen("u")) update_u();
  update_rate_block();
  if (!frozen("gamma")) {
    update_gamma(false);
    update_gamma(true);
  }
  if (!frozen("beta")) draw_excluded(s_.rate, gprior_, prior_, false, scale(s_.rate.beta(0), s_.g), rng_);
  if (!frozen("zero_beta") && zi()) {
    draw_excluded(s_.zero, gprior_, prior_, true, scale(s_.rate.beta(0), s_.g), rng_);
  }
  update_zero_block();
  if (!frozen("phi")) update_phi();
  if (!frozen("kernel")) {
    update_kernel(false);
    update_kernel(true);
  }
  if (!frozen("t_change")) update_t_change();
  if (!frozen("sigma_b")) {
    update_sigma(false);
    update_sigma(true);
  }
  if (!frozen("g")) update_g();
  if (!frozen("latent")) update_latent();

  resync();
  if (!std::isfinite(log_posterior())) {
    throw NumericError("log posterior diverged during sampling\n" + dump());
  }
}

}  // namespace

void McmcConfig::validate() const {
  if (total_iters < 1) throw ValidationError("total_iters must be positive");
  if (burn_in < 0 || burn_in >= total_iters) throw ValidationError("burn_in must lie in [0, total_iters)");
  if (thin < 1) throw ValidationError("thin must be at least 1");
  if (chains < 1) throw ValidationError("chains must be at least 1");
  if (!(target_accept >= 0.234 && target_accept <= 0.44)) {
    throw ValidationError("target acceptance must lie in [0.234, 0.44]");
  }
  if (adapt_iters < 0 || adapt_iters > burn_in) throw ValidationError("adapt_iters must lie in [0, burn_in]");
  static const std::set<std::string> known = {"u",   "beta",        "zero_beta",      "gamma",   "phi", "kernel",
                                              "t_change", "ar", "kernel_coef", "random_effects", "sigma_b", "g",
                                              "latent"};
  for (const auto& f : frozen) {
    if (!known.count(f)) throw ValidationError("unknown frozen block '" + f + "'");
  }
}

double zero_latent_probability(int y, double theta, double p) {
  if (y > 0) return 0.0;
  if (!(p > 0.0)) return 0.0;
  return p / (p + (1.0 - p) * std::exp(-theta));
}

double log_posterior(const ModelState& state, const Dataset& dataset, const PriorConfig& prior,
                     const ModelSpec& spec) {
  McmcConfig config;
  config.initial = state;
  Chain chain(dataset, prior, spec, config, 0, false);
  return chain.log_posterior();
}

namespace {

struct ChainOutput {
  std::vector<ModelState> states;
  std::vector<double> deviance;
  std::vector<AcceptanceEntry> ledger;
};

ChainOutput run_chain(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec,
                      const McmcConfig& config, int index) {
  Chain chain(dataset, prior, spec, config, derive_seed(config.seed, static_cast<std::uint64_t>(index)));
  ChainOutput out;
  out.states.reserve(static_cast<std::size_t>(config.draws_per_chain()));
  const long adapt_until = config.adapt_iters > 0 ? config.adapt_iters : config.burn_in;
  if (adapt_until == 0) chain.stop_adaptation();
  for (long iter = 1; iter <= config.total_iters; ++iter) {
    chain.sweep();
    if (iter == adapt_until) chain.stop_adaptation();
    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      ModelState s = chain.state();
      if (!config.store_latent) {
        s.latent_lograte.resize(0);
        s.zero_latents.clear();
      }
      out.states.push_back(std::move(s));
      out.deviance.push_back(chain.deviance());
    }
  }
  out.ledger = chain.ledger();
  return out;
}

}  // namespace

PosteriorDraws run_mcmc(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec,
                        const McmcConfig& config) {
  config.validate();
  std::vector<std::future<ChainOutput>> futures;
  for (int c = 0; c < config.chains; ++c) {
    futures.push_back(std::async(std::launch::async, run_chain, std::cref(dataset), std::cref(prior),
                                 std::cref(spec), std::cref(config), c));
  }
  PosteriorDraws draws;
  draws.spec = spec;
  for (int c = 0; c < config.chains; ++c) {
    auto out = futures[c].get();
    for (std::size_t k = 0; k < out.states.size(); ++k) {
      draws.states.push_back(std::move(out.states[k]));
      draws.deviance.push_back(out.deviance[k]);
      draws.chain.push_back(c);
    }
    draws.acceptance.push_back(std::move(out.ledger));
  }
  return draws;
}

PriorConfig fit_eiu_prior(const Dataset& dataset, const PriorConfig& prior, const ModelSpec& spec,
                          const McmcConfig& pilot) {
  const int p = dataset.n_covariates();
  PriorConfig flat = prior;
  flat.family = PriorFamily::flat;
  McmcConfig config = pilot;
  ModelState init = config.initial ? *config.initial : ModelState::initial(dataset, spec);
  std::fill(init.rate.gamma.begin(), init.rate.gamma.end(), 1);
  std::fill(init.zero.gamma.begin(), init.zero.gamma.end(), 1);
  config.initial = init;
  config.frozen.insert("gamma");
  const auto draws = run_mcmc(dataset, flat, spec, config);
  if (draws.size() < 2) throw ConfigError("EIU pilot fit needs at least two stored draws");
  auto sds = [&](bool zero_block) {
    std::vector<double> sd(p);
    for (int j = 0; j < p; ++j) {
      double mean = 0.0, m2 = 0.0;
      long k = 0;
      for (const auto& s : draws.states) {
        const double x = (zero_block ? s.zero : s.rate).beta(j + 1);
        ++k;
        const double delta = x - mean;
        mean += delta / k;
        m2 += delta * (x - mean);
      }
      sd[j] = std::sqrt(m2 / (k - 1));
    }
    return sd;
  };
  PriorConfig out = prior;
  out.family = PriorFamily::eiu;
  out.eiu_rate_var = eiu_prior(sds(false), dataset.n_weeks());
  out.eiu_zero_var = spec.zero_inflated ? eiu_prior(sds(true), dataset.n_weeks()) : std::vector<double>(p, 1.0);
  return out;
}

}  // namespace epikernel
