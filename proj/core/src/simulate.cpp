#include "epikernel/simulate.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "epikernel/error.hpp"
#include "epikernel/latent.hpp"
#include "epikernel/rng.hpp"

namespace epikernel {

namespace {

void validate_block(const RegressionBlock& b, int p, int years, const char* name) {
  const std::string tag(name);
  if (b.beta.size() != p + 1) throw ValidationError(tag + " beta needs " + std::to_string(p + 1) + " entries");
  if (b.random_effects.size() != years) {
    throw ValidationError(tag + " random_effects needs " + std::to_string(years) + " entries");
  }
  if (b.kernel_coef != 0.0) throw ValidationError(tag + " kernel_coef must be 0 in simulated data");
  for (int j = 0; j <= p; ++j) {
    if (!std::isfinite(b.beta(j))) throw ValidationError(tag + " beta must be finite");
  }
  if (!std::isfinite(b.ar_coef)) throw ValidationError(tag + " ar_coef must be finite");
}

RegressionBlock parse_block(const nlohmann::json& j, int p, int years) {
  RegressionBlock b;
  const auto beta = j.at("beta").get<std::vector<double>>();
  b.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  b.ar_coef = j.value("ar_coef", 0.0);
  b.kernel_coef = j.value("kernel_coef", 0.0);
  b.sigma_b = j.value("sigma_b", 1.0);
  const auto re = j.value("random_effects", std::vector<double>(years, 0.0));
  b.random_effects = Eigen::Map<const Eigen::VectorXd>(re.data(), static_cast<Eigen::Index>(re.size()));
  b.gamma.assign(p, 0);
  for (int k = 0; k < p && k + 1 < b.beta.size(); ++k) b.gamma[k] = b.beta(k + 1) != 0.0;
  return b;
}

nlohmann::json block_json(const RegressionBlock& b) {
  nlohmann::json j;
  j["beta"] = std::vector<double>(b.beta.data(), b.beta.data() + b.beta.size());
  j["ar_coef"] = b.ar_coef;
  j["kernel_coef"] = b.kernel_coef;
  j["sigma_b"] = b.sigma_b;
  j["random_effects"] = std::vector<double>(b.random_effects.data(), b.random_effects.data() + b.random_effects.size());
  return j;
}

double block_eta(const RegressionBlock& b, const Dataset& d, int i, int y_prev) {
  double eta = b.beta(0) + b.random_effects(d.years[i] - 1);
  for (int j = 1; j < b.beta.size(); ++j) eta += b.beta(j) * d.design(i, j);
  if (i > 0) eta += b.ar_coef * y_prev;
  return eta;
}

}  // namespace

void SimulationTruth::validate() const {
  if (n < 2) throw ValidationError("simulation needs at least 2 weeks");
  if (n_years < 1 || n_years > n) throw ValidationError("years must lie in [1, n]");
  if (p < 0) throw ValidationError("p must be nonnegative");
  if (!covariate_names.empty() && static_cast<int>(covariate_names.size()) != p) {
    throw ValidationError("covariate_names must have p entries");
  }
  validate_block(rate, p, n_years, "rate");
  if (zero_inflated) validate_block(zero, p, n_years, "zero");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ValidationError("phi must be positive");
  if (!(d_min > 0.0)) throw ValidationError("d_min must be positive");
  if (!(region_km > 0.0)) throw ValidationError("region_km must be positive");
}

SimulationTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file " + path.string());
  SimulationTruth t;
  try {
    const auto j = nlohmann::json::parse(in);
    t.n = j.value("n", 260);
    t.n_years = j.value("years", 5);
    t.p = j.value("p", 9);
    t.covariate_names = j.value("covariate_names", std::vector<std::string>{});
    t.phi = j.value("phi", 2.0);
    t.zero_inflated = j.value("zero_inflated", true);
    t.d_min = j.value("d_min", 250.0);
    t.region_km = j.value("region_km", 50.0);
    t.rate = parse_block(j.at("rate"), t.p, t.n_years);
    if (t.zero_inflated) {
      t.zero = parse_block(j.at("zero"), t.p, t.n_years);
    } else {
      t.zero = parse_block(nlohmann::json{{"beta", std::vector<double>(t.p + 1, 0.0)}}, t.p, t.n_years);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

SimulationResult simulate_dataset(const SimulationTruth& truth, std::uint64_t seed) {
  truth.validate();
  Rng rng(seed);
  const int n = truth.n, p = truth.p;
  Dataset d;
  d.n_years = truth.n_years;
  d.years.resize(n);
  for (int i = 0; i < n; ++i) d.years[i] = 1 + static_cast<int>(static_cast<long>(i) * truth.n_years / n);
  d.covariate_names = truth.covariate_names;
  if (d.covariate_names.empty()) {
    for (int j = 1; j <= p; ++j) d.covariate_names.push_back("x" + std::to_string(j));
  }
  d.design.resize(n, p + 1);
  d.design.col(0).setOnes();
  for (int j = 1; j <= p; ++j) {
    for (int i = 0; i < n; ++i) d.design(i, j) = rng.normal();
  }

  ModelState s;
  s.rate = truth.rate;
  s.zero = truth.zero;
  s.ou = OUParams::from_phi(truth.phi);
  s.latent_lograte.resize(n);
  s.zero_latents.assign(n, 0);
  d.counts.resize(n);
  for (int i = 0; i < n; ++i) {
    const int y_prev = i > 0 ? d.counts[i - 1] : 0;
    const double mu = block_eta(truth.rate, d, i, y_prev);
    double lambda = mu;
    if (i > 0) {
      const auto m = ou_mean_var(mu, s.latent_lograte(i - 1), truth.phi);
      lambda = rng.normal(m.mean, std::sqrt(m.var));
    }
    s.latent_lograte(i) = lambda;
    bool structural = false;
    if (truth.zero_inflated) structural = rng.bernoulli(logistic(block_eta(truth.zero, d, i, y_prev)));
    s.zero_latents[i] = structural ? 1 : 0;
    const double theta = std::exp(lambda);
    if (!std::isfinite(theta) || theta > 1e7) throw NumericError("simulated rate overflows; lower the coefficients");
    d.counts[i] = structural ? 0 : static_cast<int>(rng.poisson(theta));
  }

  std::vector<std::vector<FarmLocation>> farms(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d.counts[i]; ++k) {
      farms[i].push_back({truth.region_km * rng.uniform(), truth.region_km * rng.uniform()});
    }
  }
  d.distances = build_distance_bundle(farms, d.counts, truth.d_min);
  validate_dataset(d, true);
  return {std::move(d), std::move(s)};
}

void save_truth(const SimulationResult& result, const SimulationTruth& truth, std::uint64_t seed,
                const std::filesystem::path& path) {
  nlohmann::json j;
  j["n"] = truth.n;
  j["years"] = truth.n_years;
  j["p"] = truth.p;
  j["covariate_names"] = result.dataset.covariate_names;
  j["phi"] = truth.phi;
  j["zero_inflated"] = truth.zero_inflated;
  j["d_min"] = truth.d_min;
  j["region_km"] = truth.region_km;
  j["seed"] = seed;
  j["rate"] = block_json(result.state.rate);
  if (truth.zero_inflated) j["zero"] = block_json(result.state.zero);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace epikernel
