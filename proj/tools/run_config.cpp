#include "run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "epikernel/error.hpp"

namespace epikernel::cli {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void read_mcmc(const json& j, McmcConfig& m) {
  m.total_iters = j.value("total_iters", m.total_iters);
  m.burn_in = j.value("burn_in", m.burn_in);
  m.thin = j.value("thin", m.thin);
  m.chains = j.value("chains", m.chains);
  m.target_accept = j.value("target_accept", m.target_accept);
  m.adapt_iters = j.value("adapt_iters", m.adapt_iters);
}

json mcmc_json(const McmcConfig& m) {
  return {{"total_iters", m.total_iters}, {"burn_in", m.burn_in},         {"thin", m.thin},
          {"chains", m.chains},           {"target_accept", m.target_accept}, {"adapt_iters", m.adapt_iters}};
}

int parse_exp_sign(const std::string& text) {
  if (text == "text") return +1;
  if (text == "code") return -1;
  throw ValidationError("prior exponent sign must be 'text' or 'code'; got '" + text + "'");
}

}  // namespace

std::optional<KernelFamily> parse_kernel_choice(const std::string& text) {
  if (text == "none") return std::nullopt;
  return parse_kernel_family(text);
}

std::string kernel_label(const std::optional<KernelFamily>& kernel) {
  return kernel ? to_string(*kernel) : std::string("none");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();

  RunConfig c;
  c.config_path = path;
  try {
    c.dataset = resolve(base, j.value("dataset", std::string("data/manifest.json")));
    c.strict = j.value("strict", false);
    c.model.kernel = parse_kernel_choice(overrides.kernel.value_or(j.value("kernel", std::string("A"))));
    c.model.zero_inflated = j.value("zero_inflated", true);

    const json pj = j.value("prior", json::object());
    if (pj.value("conventions", std::string("text")) == "code") c.prior.use_code_conventions();
    c.prior.family = parse_prior_family(overrides.prior.value_or(pj.value("family", std::string("hyper-g"))));
    c.prior.alpha = overrides.alpha.value_or(pj.value("alpha", c.prior.alpha));
    c.prior.model_space =
        parse_model_space(overrides.model_space.value_or(pj.value("model_space", std::string("uniform"))));
    if (pj.contains("exp_sign") || overrides.exp_sign) {
      c.prior.exp_sign = parse_exp_sign(overrides.exp_sign.value_or(pj.value("exp_sign", std::string("text"))));
    }
    c.prior.beta0_var = pj.value("beta0_var", c.prior.beta0_var);
    c.prior.coef_var = pj.value("coef_var", c.prior.coef_var);
    c.prior.sigma_upper = pj.value("sigma_upper", c.prior.sigma_upper);
    if (pj.contains("sigma_prior")) {
      const auto s = pj.at("sigma_prior").get<std::string>();
      if (s == "uniform") {
        c.prior.sigma_prior = SigmaPrior::uniform_sd;
      } else if (s == "gamma") {
        c.prior.sigma_prior = SigmaPrior::gamma_precision;
      } else {
        throw ValidationError("sigma_prior must be 'uniform' or 'gamma'");
      }
    }
    if (c.prior.has_random_g() && !(c.prior.alpha > 2.0 && c.prior.alpha <= 4.0)) {
      throw ValidationError("alpha must lie in (2, 4]");
    }

    read_mcmc(j.value("mcmc", json::object()), c.mcmc);
    c.eiu_pilot = c.mcmc;
    read_mcmc(j.value("eiu_pilot", json::object()), c.eiu_pilot);
    c.seed = overrides.seed.value_or(j.value("seed", std::uint64_t{1}));
    c.mcmc.seed = c.seed;
    c.eiu_pilot.seed = c.seed ^ 0x5eed5eedull;
    c.mcmc.validate();
    c.eiu_pilot.validate();

    c.out = overrides.out ? std::filesystem::path(*overrides.out) : resolve(base, j.value("out", std::string("out")));
    c.alphas = j.value("alphas", std::vector<double>{2.01, 2.1, 2.5, 3.0, 3.5, 3.9, 3.99});
    c.families = j.value("families", std::vector<std::string>{"A", "B", "C", "D", "E", "F", "none"});
    c.draws = j.contains("draws") ? resolve(base, j.at("draws").get<std::string>()) : c.out / "draws.csv";
    if (j.contains("scenarios")) c.scenarios = resolve(base, j.at("scenarios").get<std::string>());
    if (j.contains("truth")) c.truth = resolve(base, j.at("truth").get<std::string>());
    c.components = j.value("components", json::object());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }

  c.effective = {{"dataset", c.dataset.generic_string()},
                 {"strict", c.strict},
                 {"kernel", kernel_label(c.model.kernel)},
                 {"zero_inflated", c.model.zero_inflated},
                 {"prior",
                  {{"family", to_string(c.prior.family)},
                   {"alpha", c.prior.alpha},
                   {"model_space", to_string(c.prior.model_space)},
                   {"exp_sign", c.prior.exp_sign},
                   {"beta0_var", c.prior.beta0_var},
                   {"coef_var", c.prior.coef_var},
                   {"sigma_prior", c.prior.sigma_prior == SigmaPrior::uniform_sd ? "uniform" : "gamma"},
                   {"sigma_upper", c.prior.sigma_upper}}},
                 {"mcmc", mcmc_json(c.mcmc)},
                 {"eiu_pilot", mcmc_json(c.eiu_pilot)},
                 {"seed", c.seed},
                 {"alphas", c.alphas},
                 {"families", c.families},
                 {"draws", c.draws.generic_string()},
                 {"scenarios", c.scenarios ? c.scenarios->generic_string() : ""},
                 {"truth", c.truth ? c.truth->generic_string() : ""},
                 {"components", c.components}};
  return c;
}

}  // namespace epikernel::cli
