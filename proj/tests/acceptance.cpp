// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `epikernel_acceptance 1 2 8`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "epikernel/branching.hpp"
#include "epikernel/draws_io.hpp"
#include "epikernel/latent.hpp"
#include "epikernel/model.hpp"
#include "epikernel/priors.hpp"
#include "epikernel/rng.hpp"
#include "epikernel/sampler.hpp"
#include "epikernel/scenario.hpp"
#include "epikernel/simulate.hpp"
#include "epikernel/summary.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace epikernel;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double poisson_logpmf(int y, double theta) { return y * std::log(theta) - theta - std::lgamma(y + 1.0); }

/// Asymptotic Kolmogorov survival function P(K > x).
double kolmogorov_pvalue(double d, double n) {
  const double x = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  double s = 0.0;
  for (int k = 1; k < 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

McmcConfig chain_config(long total, long burn, long thin, std::uint64_t seed) {
  McmcConfig c;
  c.total_iters = total;
  c.burn_in = burn;
  c.thin = thin;
  c.chains = 1;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double lambda : {1.1, 1.5, 2.0, 3.0, 5.0}) {
    worst = std::max(worst, std::abs(extinction_poisson(lambda) - test::extinction_fixed_point(lambda)));
  }
  o.check(worst <= 1e-10, "oracle agreement");
  const double q2 = extinction_poisson(2.0);
  o.check(std::abs(q2 - 0.203188) < 5e-7, "q(2) = 0.203188");
  for (double lambda : {0.1, 0.5, 0.99, 1.0}) o.check(extinction_poisson(lambda) == 1.0, "subcritical exactly 1");
  double worst_z = 0.0;
  std::uint64_t seed = 101;
  for (double lambda : {1.5, 2.0, 3.0}) {
    const long trees = 100000;
    const double q = extinction_poisson(lambda);
    const double frac = test::simulated_extinction(lambda, trees, 200, seed++, 200);
    worst_z = std::max(worst_z, std::abs(frac - q) / std::sqrt(q * (1 - q) / trees));
  }
  o.check(worst_z < 3.0, "Galton-Watson within 3 SE");
  const double secs = seconds_since(t0);
  o.check(secs < 5.0, "runtime < 5 s");
  o.detail << " max|q-oracle|=" << worst << " q(2)=" << q2 << " max GW z=" << worst_z << " time=" << secs << "s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_general = 0.0, worst_simple = 0.0;
  for (double lambda = 0.02; lambda <= 8.0; lambda += 0.02) {
    for (int q = 1; q <= 25; ++q) {
      const double v = occupation_time(lambda, q);
      const double general = std::pow(lambda, q - 1) / (q * std::pow(std::max(1.0, lambda), q));
      worst_general = std::max(worst_general, std::abs(v - general) / general);
      if (lambda > 1.0) worst_simple = std::max(worst_simple, std::abs(v - 1.0 / (q * lambda)) * q * lambda);
    }
  }
  o.check(worst_general <= 1e-14, "general form");
  o.check(worst_simple <= 1e-14, "1/(Q lambda) for lambda > 1");
  const double secs = seconds_since(t0);
  o.check(secs < 1.0, "runtime < 1 s");
  o.detail << " max rel err general=" << worst_general << " simplified=" << worst_simple << " time=" << secs << "s";
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(303);
  double worst_z = 0.0, worst_compose = 0.0;
  const int n = 100000;
  for (double phi : {0.1, 1.0, 2.171}) {
    for (double delta : {0.25, 1.0}) {
      const double mu = 0.5, x0 = -0.7;
      const auto m = ou_mean_var(mu, x0, phi, delta);
      const std::vector<double> level{mu};
      double s = 0.0, ss = 0.0;
      for (int k = 0; k < n; ++k) {
        const double x = simulate_path(level, phi, x0, rng, delta)[0];
        s += x;
        ss += x * x;
      }
      const double mean = s / n;
      const double var = (ss - n * mean * mean) / (n - 1);
      worst_z = std::max(worst_z, std::abs(mean - m.mean) / std::sqrt(m.var / n));
      worst_z = std::max(worst_z, std::abs(var - m.var) / (m.var * std::sqrt(2.0 / (n - 1))));

      const auto h1 = ou_mean_var(mu, x0, phi, delta / 2);
      const auto h2 = ou_mean_var(mu, h1.mean, phi, delta / 2);
      const double decay = std::exp(-phi * delta / 2);
      worst_compose = std::max({worst_compose, std::abs(h2.mean - m.mean),
                                std::abs(decay * decay * h1.var + h2.var - m.var)});
    }
  }
  o.check(worst_z < 4.0, "Monte Carlo moments within 4 SE");
  o.check(worst_compose <= 1e-12, "half steps compose");
  const double secs = seconds_since(t0);
  o.check(secs < 10.0, "runtime < 10 s");
  o.detail << " max z=" << worst_z << " max compose err=" << worst_compose << " time=" << secs << "s";
  return o;
}

Outcome criterion4() {
  Outcome o;
  // Two weeks with a lag term in the zero block, so week 2's p depends on y1.
  Dataset d = test::toy_dataset({0, 0}, 1, 1);
  ModelSpec spec{std::nullopt, true};
  auto s = ModelState::initial(d, spec);
  s.rate.beta.setZero();
  s.zero.beta.setZero();
  s.zero.beta(0) = -0.4;
  s.zero.ar_coef = -0.3;
  s.zero.random_effects.setZero();
  s.rate.random_effects.setZero();
  s.latent_lograte << 0.0, 0.6;
  double total = 0.0;
  for (int y1 = 0; y1 <= 60; ++y1) {
    for (int y2 = 0; y2 <= 60; ++y2) {
      d.counts = {y1, y2};
      s.latent_lograte(0) = rate_predictor(s, d, 1, spec.kernel);
      total += std::exp(observation_loglik(s, d, spec));
    }
  }
  o.check(std::abs(total - 1.0) <= 1e-6, "normalization");

  double worst = 0.0;
  for (int y = 0; y <= 30; ++y) {
    for (double theta : {0.05, 0.7, 3.0, 11.0}) {
      worst = std::max(worst, std::abs(zip_loglik_point(y, theta, 0.0) - poisson_logpmf(y, theta)));
    }
  }
  ModelSpec poisson{std::nullopt, false};
  d.counts = {3, 1};
  auto ps = ModelState::initial(d, poisson);
  ps.latent_lograte << 0.2, -0.5;
  worst = std::max(worst, std::abs(observation_loglik(ps, d, poisson) -
                                   (poisson_logpmf(3, std::exp(0.2)) + poisson_logpmf(1, std::exp(-0.5)))));
  o.check(worst <= 1e-12, "p = 0 is Poisson");
  o.detail << " sum=" << total << " max|ZIP(p=0)-Poisson|=" << worst;
  return o;
}

Outcome criterion5() {
  Outcome o;
  boost::math::quadrature::tanh_sinh<double> quad;
  double worst = 0.0;
  for (double alpha : {2.1, 3.0, 4.0}) {
    auto f = [&](double u, double xc) {
      const double one_minus_u = u > 0.5 ? xc : 1.0 - u;
      const double g = u / one_minus_u;
      return std::exp(shrinkage_logprior(g, alpha, PriorFamily::hyper_g, 1) - 2.0 * std::log(one_minus_u));
    };
    worst = std::max(worst, std::abs(quad.integrate(f, 0.0, 1.0) - 1.0));
  }
  o.check(worst <= 1e-6, "shrinkage prior integrates to 1");

  Rng rng(505);
  std::vector<double> u(10000);
  for (auto& v : u) {
    const double g = sample_shrinkage_g(4.0, PriorFamily::hyper_g, 1, rng);
    v = g / (1.0 + g);
  }
  const double ks = test::ks_distance(u, [](double x) { return x; });
  const double pval = kolmogorov_pvalue(ks, 10000.0);
  o.check(pval > 0.01, "KS uniformity at level 0.01");

  std::vector<std::uint8_t> gamma(9);
  double total = 0.0;
  for (int mask = 0; mask < 512; ++mask) {
    for (int j = 0; j < 9; ++j) gamma[j] = (mask >> j) & 1;
    total += std::exp(model_space_logprior(gamma, ModelSpacePrior::beta_binomial));
  }
  o.check(std::abs(total - 1.0) <= 1e-12, "beta-binomial sums to 1");
  o.detail << " max|integral-1|=" << worst << " KS D=" << ks << " p=" << pval << " beta-binomial sum=" << total;
  return o;
}

SimulationTruth recovery_truth() {
  SimulationTruth t;
  for (int j = 0; j < t.p; ++j) t.covariate_names.push_back("x" + std::to_string(j + 1));
  for (auto* b : {&t.rate, &t.zero}) {
    b->beta = Eigen::VectorXd::Zero(t.p + 1);
    b->gamma.assign(t.p, 0);
    b->random_effects = Eigen::VectorXd::Zero(t.n_years);
    b->sigma_b = 0.2;
  }
  t.rate.beta(0) = 1.5;
  t.rate.beta(2) = 0.5;
  t.rate.beta(5) = -0.4;
  t.rate.gamma[1] = t.rate.gamma[4] = 1;
  t.zero.beta(0) = -0.5;
  t.zero.beta(7) = 1.2;
  t.zero.gamma[6] = 1;
  t.phi = 2.0;
  return t;
}

double conditional_median(const PosteriorDraws& draws, bool zero, int j) {
  std::vector<double> v;
  for (const auto& s : draws.states) {
    const auto& b = zero ? s.zero : s.rate;
    if (b.gamma[j - 1]) v.push_back(b.beta(j));
  }
  return v.empty() ? NAN : quantile(v, 0.5);
}

Outcome criterion6() {
  Outcome o;
  const auto truth = recovery_truth();
  int correct = 0, slots = 0;
  double worst_rel = 0.0, slowest = 0.0;
  for (std::uint64_t seed : {61, 62, 63}) {
    const auto sim = simulate_dataset(truth, seed);
    const auto data = center_covariates(sim.dataset);
    PriorConfig prior;
    prior.alpha = 4.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto draws = run_mcmc(data, prior, ModelSpec{std::nullopt, true}, chain_config(20000, 5000, 10, seed));
    slowest = std::max(slowest, seconds_since(t0));
    const auto inc = inclusion_probabilities(draws);
    o.detail << " seed" << seed << ":";
    for (int block = 0; block < 2; ++block) {
      const auto& probs = block ? inc.zero : inc.rate;
      const auto& tb = block ? truth.zero : truth.rate;
      for (int j = 1; j <= truth.p; ++j) {
        const bool active = tb.gamma[j - 1] != 0;
        const bool ok = active ? probs[j - 1] > 0.5 : probs[j - 1] < 0.5;
        correct += ok;
        ++slots;
        if (active) {
          const double med = conditional_median(draws, block == 1, j);
          const double rel = std::abs(med - tb.beta(j)) / std::abs(tb.beta(j));
          worst_rel = std::isnan(rel) ? INFINITY : std::max(worst_rel, rel);
          o.detail << ' ' << (block ? "z" : "") << "b" << j << "=" << probs[j - 1] << "/" << med;
        }
      }
    }
  }
  // 18 of 20 slots, i.e. at least 90% of the pooled slots correct.
  o.check(correct * 20 >= slots * 18, "inclusion classification >= 90%");
  o.check(worst_rel <= 0.5, "active medians within 50%");
  o.check(slowest < 600.0, "runtime < 10 min per fit");
  o.detail << " correct=" << correct << "/" << slots << " max rel err=" << worst_rel << " slowest fit=" << slowest
           << "s";
  return o;
}

struct EvrosFit {
  PosteriorDraws kernel_a;
  PosteriorDraws none;
};

const Dataset& evros_raw() {
  static const Dataset d = load_dataset(test::evros_manifest());
  return d;
}

const Dataset& evros_centered() {
  static const Dataset d = center_covariates(evros_raw());
  return d;
}

/// Fits shared by criteria 7 and 8, computed once.
const std::vector<EvrosFit>& evros_fits(double* slowest) {
  static std::vector<EvrosFit> fits;
  static double slow = 0.0;
  if (fits.empty()) {
    for (std::uint64_t seed : {71, 72, 73}) {
      EvrosFit f;
      auto t0 = std::chrono::steady_clock::now();
      f.kernel_a = run_mcmc(evros_centered(), PriorConfig{}, ModelSpec{KernelFamily::A, true},
                            chain_config(25000, 5000, 10, seed));
      slow = std::max(slow, seconds_since(t0));
      t0 = std::chrono::steady_clock::now();
      f.none = run_mcmc(evros_centered(), PriorConfig{}, ModelSpec{std::nullopt, true},
                        chain_config(25000, 5000, 10, seed));
      slow = std::max(slow, seconds_since(t0));
      fits.push_back(std::move(f));
    }
  }
  if (slowest) *slowest = slow;
  return fits;
}

std::set<std::string> top_two(const std::vector<double>& probs, const Dataset& d) {
  std::vector<int> idx(probs.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<int>(j);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return probs[a] > probs[b]; });
  return {d.covariate_names[idx[0]], d.covariate_names[idx[1]]};
}

Outcome criterion7() {
  Outcome o;
  double slowest = 0.0;
  const auto& fits = evros_fits(&slowest);
  const auto& d = evros_raw();
  const int tmax = d.covariate_index("max_temp"), hum = d.covariate_index("avg_humidity"),
            tmin = d.covariate_index("min_temp");
  int pass_a = 0, pass_b = 0, pass_c = 0, pass_d = 0;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& f = fits[k];
    const double da = mean_deviance(f.kernel_a), dn = mean_deviance(f.none);
    pass_a += dn - da > 30.0;

    const auto inc = inclusion_probabilities(f.kernel_a);
    const auto top_rate = top_two(inc.rate, d), top_zero = top_two(inc.zero, d);
    pass_b += top_rate == std::set<std::string>{"max_temp", "avg_humidity"} &&
              top_zero == std::set<std::string>{"min_temp", "avg_humidity"};

    const double b4 = conditional_median(f.kernel_a, false, tmax), b6 = conditional_median(f.kernel_a, false, hum);
    const double z5 = conditional_median(f.kernel_a, true, tmin), z6 = conditional_median(f.kernel_a, true, hum);
    pass_c += b4 > 0 && b6 < 0 && z5 > 0 && z6 > 0;

    std::map<std::string, double> q;
    for (const auto& sc : default_scenarios()) q[sc.name] = scenario_extinction(f.kernel_a, sc, d).median;
    pass_d += q["distance-min"] < q["distance-max"] && q["maxtemp-max"] < q["maxtemp-min"];

    o.detail << " seed" << 71 + k << ": Dbar A=" << da << " none=" << dn << " rate top2={";
    for (const auto& s : top_rate) o.detail << s << ' ';
    o.detail << "} zero top2={";
    for (const auto& s : top_zero) o.detail << s << ' ';
    o.detail << "} b4=" << b4 << " b6=" << b6 << " z5=" << z5 << " z6=" << z6 << " q(dist min/max)="
             << q["distance-min"] << "/" << q["distance-max"] << " q(tmax max/min)=" << q["maxtemp-max"] << "/"
             << q["maxtemp-min"] << ";";
  }
  o.check(pass_a >= 2, "(a) deviance gap > 30");
  o.check(pass_b >= 2, "(b) top-2 inclusion");
  o.check(pass_c >= 2, "(c) sign pattern");
  o.check(pass_d >= 2, "(d) extinction ordering");
  o.check(slowest < 1800.0, "runtime < 30 min per fit");
  o.detail << " seeds passing a/b/c/d=" << pass_a << "/" << pass_b << "/" << pass_c << "/" << pass_d
           << " slowest fit=" << slowest << "s";
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto& fit = evros_fits(nullptr).front().kernel_a;
  const auto dec = decompose_mu(fit, evros_centered(), default_component_map(evros_centered()));
  double worst = 0.0;
  for (std::size_t k = 0; k < fit.size(); ++k) {
    for (int i = 0; i < evros_centered().n_weeks(); ++i) {
      const double mu = rate_predictor(fit.states[k], evros_centered(), i + 1, fit.spec.kernel);
      worst = std::max(worst, std::abs(dec.endemic[k][i] + dec.epidemic[k][i] - mu));
    }
  }
  o.check(worst <= 1e-12, "endemic + epidemic = mu");
  o.detail << " draws=" << fit.size() << " max|endemic+epidemic-mu|=" << worst;
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto dir = test::scratch_dir("acceptance_determinism");
  ModelSpec spec{KernelFamily::A, true};
  McmcConfig cfg = chain_config(3000, 1000, 10, 909);
  cfg.chains = 2;
  const auto layout = ParameterLayout::of(spec, evros_centered().n_covariates(), evros_centered().n_years);
  for (const char* name : {"a.csv", "b.csv"}) {
    write_draws(dir / name, run_mcmc(evros_centered(), PriorConfig{}, spec, cfg), layout);
  }
  const auto a = test::slurp(dir / "a.csv"), b = test::slurp(dir / "b.csv");
  o.check(!a.empty() && a == b, "byte-identical draws.csv");
  o.detail << " bytes=" << a.size();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = criteria[c]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("criterion %d: %s%s\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
