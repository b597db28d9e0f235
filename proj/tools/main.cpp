#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatio-temporal ZIP epidemic models and branching-process analytics"};
  app.require_subcommand(1);

  std::string config;
  epikernel::cli::Overrides ov;
  std::uint64_t seed = 0;
  std::string out, kernel, prior, model_space, exp_sign;
  double alpha = 0.0;

  const std::pair<const char*, const char*> commands[] = {
      {"fit", "Fit the model and write draws, summary, inclusion and deviance tables"},
      {"sweep-alpha", "Refit across hyper-g alpha values and tabulate inclusion probabilities"},
      {"compare-kernels", "Fit each kernel family and rank them by mean deviance"},
      {"extinct", "Posterior extinction probabilities for covariate scenarios"},
      {"occupy", "Posterior expected occupation times for covariate scenarios"},
      {"decompose", "Weekly endemic/epidemic decomposition of mu"},
      {"simulate", "Simulate a synthetic dataset from a truth file"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--kernel", kernel, "Kernel family")->check(CLI::IsMember({"A", "B", "C", "D", "E", "F", "none"}));
    sub->add_option("--prior", prior, "Coefficient prior")
        ->check(CLI::IsMember({"hyper-g", "hyper-g-n", "zg-n", "zg-p2", "eiu"}));
    sub->add_option("--alpha", alpha, "Hyper-g alpha in (2, 4]");
    sub->add_option("--model-space", model_space, "Model-space prior")
        ->check(CLI::IsMember({"uniform", "beta-binomial"}));
    sub->add_option("--prior-exp-sign", exp_sign, "Sign of beta0 in the g-prior covariance")
        ->check(CLI::IsMember({"text", "code"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : epikernel::cli::kConfig;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--out")) ov.out = out;
  if (sub->count("--kernel")) ov.kernel = kernel;
  if (sub->count("--prior")) ov.prior = prior;
  if (sub->count("--alpha")) ov.alpha = alpha;
  if (sub->count("--model-space")) ov.model_space = model_space;
  if (sub->count("--prior-exp-sign")) ov.exp_sign = exp_sign;
  return epikernel::cli::dispatch(sub->get_name(), config, ov);
}
