#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "epikernel/csv.hpp"
#include "epikernel/data.hpp"
#include "epikernel/draws_io.hpp"
#include "epikernel/error.hpp"
#include "epikernel/scenario.hpp"
#include "epikernel/simulate.hpp"
#include "epikernel/summary.hpp"

#ifndef EPIKERNEL_VERSION
#define EPIKERNEL_VERSION "0.0.0"
#endif

namespace epikernel::cli {

namespace {

using csv::format_fixed17;
using nlohmann::json;

struct FitResult {
  PosteriorDraws draws;
  ParameterLayout layout;
  PriorConfig prior;
};

Dataset load_raw(const RunConfig& c) {
  auto d = load_dataset(c.dataset, c.strict);
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
  return d;
}

FitResult fit(const Dataset& centered, const RunConfig& c, const ModelSpec& spec, PriorConfig prior) {
  if (prior.family == PriorFamily::eiu) prior = fit_eiu_prior(centered, prior, spec, c.eiu_pilot);
  FitResult r;
  r.prior = prior;
  r.draws = run_mcmc(centered, prior, spec, c.mcmc);
  r.layout = ParameterLayout::of(spec, centered.n_covariates(), centered.n_years);
  return r;
}

void write_manifest(const RunConfig& c, const std::string& command, json extra) {
  const std::string canonical = c.effective.dump();
  json m = {{"command", command},
            {"version", EPIKERNEL_VERSION},
            {"seed", c.seed},
            {"config_hash", fnv1a_hex(canonical)},
            {"config", c.effective}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(c.out / "run_manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + (c.out / "run_manifest.json").string());
  out << m.dump(2) << '\n';
}

void write_fit_outputs(const std::filesystem::path& dir, const FitResult& r, const Dataset& d) {
  std::filesystem::create_directories(dir);
  write_draws(dir / "draws.csv", r.draws, r.layout);

  csv::Writer summary(dir / "summary.csv");
  summary.row({"parameter", "mean", "sd", "median", "lo95", "hi95", "mcse", "rhat"});
  for (const auto& s : summarize(r.draws, r.layout)) {
    summary.row({s.name, format_fixed17(s.mean), format_fixed17(s.sd), format_fixed17(s.median),
                 format_fixed17(s.lo), format_fixed17(s.hi), format_fixed17(s.mcse), format_fixed17(s.rhat)});
  }
  summary.close();

  const auto inc = inclusion_probabilities(r.draws);
  csv::Writer inclusion(dir / "inclusion.csv");
  inclusion.row({"block", "index", "covariate", "probability"});
  for (std::size_t j = 0; j < inc.rate.size(); ++j) {
    inclusion.row({"rate", std::to_string(j + 1), d.covariate_names[j], format_fixed17(inc.rate[j])});
  }
  if (r.layout.zero_inflated) {
    for (std::size_t j = 0; j < inc.zero.size(); ++j) {
      inclusion.row({"zero", std::to_string(j + 1), d.covariate_names[j], format_fixed17(inc.zero[j])});
    }
  }
  inclusion.close();

  csv::Writer deviance(dir / "deviance.csv");
  deviance.row({"chain", "draw", "deviance"});
  long within = 0;
  for (std::size_t k = 0; k < r.draws.size(); ++k) {
    if (k > 0 && r.draws.chain[k] != r.draws.chain[k - 1]) within = 0;
    deviance.row({std::to_string(r.draws.chain[k]), std::to_string(++within), format_fixed17(r.draws.deviance[k])});
  }
  deviance.close();

  csv::Writer acc(dir / "acceptance.csv");
  acc.row({"chain", "parameter", "proposed", "accepted", "rate", "log_step_frozen", "log_step_final"});
  for (std::size_t c = 0; c < r.draws.acceptance.size(); ++c) {
    for (const auto& a : r.draws.acceptance[c]) {
      acc.row({std::to_string(c), a.name, std::to_string(a.proposed), std::to_string(a.accepted),
               format_fixed17(a.rate()), format_fixed17(a.log_step_frozen), format_fixed17(a.log_step_final)});
    }
  }
  acc.close();
}

PosteriorDraws load_draws(const RunConfig& c, const Dataset& d) {
  ParameterLayout layout;
  auto draws = read_draws(c.draws, c.model.kernel, &layout);
  if (layout.p != d.n_covariates() || layout.n_years != d.n_years) {
    throw DimensionError(c.draws.string() + " does not match the dataset dimensions");
  }
  if (draws.size() == 0) throw DataError(c.draws.string() + " holds no draws");
  return draws;
}

ScenarioFile scenarios_of(const RunConfig& c) {
  if (c.scenarios) return load_scenarios(*c.scenarios);
  return ScenarioFile{default_scenarios(), default_scenario_values(), {1, 2, 3, 4, 5, 10}};
}

ComponentMap components_of(const RunConfig& c, const Dataset& d) {
  auto map = default_component_map(d);
  for (const auto& [term, v] : c.components.items()) {
    const auto s = v.get<std::string>();
    if (s == "endemic") {
      map[term] = Component::endemic;
    } else if (s == "epidemic") {
      map[term] = Component::epidemic;
    } else {
      throw ValidationError("component for '" + term + "' must be 'endemic' or 'epidemic'");
    }
  }
  return map;
}

std::string alpha_label(double alpha) {
  std::string s = csv::format_shortest(alpha);
  std::replace(s.begin(), s.end(), '.', '_');
  return s;
}

}  // namespace

int cmd_fit(const RunConfig& c) {
  const auto raw = load_raw(c);
  const auto centered = center_covariates(raw);
  const auto r = fit(centered, c, c.model, c.prior);
  write_fit_outputs(c.out, r, raw);
  write_manifest(c, "fit", {{"draws", r.draws.size()}, {"mean_deviance", mean_deviance(r.draws)}});
  return kOk;
}

int cmd_sweep_alpha(const RunConfig& c) {
  if (c.alphas.empty()) throw ValidationError("alphas list is empty");
  if (!c.prior.has_random_g()) throw ValidationError("sweep-alpha needs the hyper-g or hyper-g-n prior");
  for (double a : c.alphas) {
    if (!(a > 2.0 && a <= 4.0)) throw ValidationError("alpha must lie in (2, 4]; got " + csv::format_shortest(a));
  }
  const auto raw = load_raw(c);
  const auto centered = center_covariates(raw);
  std::filesystem::create_directories(c.out);
  csv::Writer table(c.out / "inclusion_by_alpha.csv");
  table.row({"alpha", "block", "index", "covariate", "probability"});
  json fits = json::array();
  for (double a : c.alphas) {
    PriorConfig prior = c.prior;
    prior.alpha = a;
    const auto r = fit(centered, c, c.model, prior);
    write_fit_outputs(c.out / ("alpha_" + alpha_label(a)), r, raw);
    const auto inc = inclusion_probabilities(r.draws);
    for (std::size_t j = 0; j < inc.rate.size(); ++j) {
      table.row({format_fixed17(a), "rate", std::to_string(j + 1), raw.covariate_names[j], format_fixed17(inc.rate[j])});
    }
    if (c.model.zero_inflated) {
      for (std::size_t j = 0; j < inc.zero.size(); ++j) {
        table.row(
            {format_fixed17(a), "zero", std::to_string(j + 1), raw.covariate_names[j], format_fixed17(inc.zero[j])});
      }
    }
    fits.push_back({{"alpha", a}, {"mean_deviance", mean_deviance(r.draws)}});
  }
  table.close();
  write_manifest(c, "sweep-alpha", {{"fits", fits}});
  return kOk;
}

int cmd_compare_kernels(const RunConfig& c) {
  if (c.families.empty()) throw ValidationError("families list is empty");
  std::set<std::string> seen;
  std::vector<std::optional<KernelFamily>> kernels;
  for (const auto& f : c.families) {
    auto k = parse_kernel_choice(f);
    if (!seen.insert(kernel_label(k)).second) throw ValidationError("duplicate kernel family '" + f + "'");
    kernels.push_back(k);
  }
  const auto raw = load_raw(c);
  const auto centered = center_covariates(raw);
  struct Row {
    std::string kernel;
    double dbar;
    double mcse;
  };
  std::vector<Row> rows;
  for (const auto& k : kernels) {
    ModelSpec spec = c.model;
    spec.kernel = k;
    const auto r = fit(centered, c, spec, c.prior);
    write_fit_outputs(c.out / ("kernel_" + kernel_label(k)), r, raw);
    rows.push_back({kernel_label(k), mean_deviance(r.draws), batch_means_mcse(r.draws.deviance, r.draws.chain)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.dbar < b.dbar; });
  csv::Writer out(c.out / "kernel_comparison.csv");
  out.row({"rank", "kernel", "mean_deviance", "mcse"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row({std::to_string(i + 1), rows[i].kernel, format_fixed17(rows[i].dbar), format_fixed17(rows[i].mcse)});
  }
  out.close();
  write_manifest(c, "compare-kernels", {{"kernels", rows.size()}});
  return kOk;
}

int cmd_extinct(const RunConfig& c) {
  const auto raw = load_raw(c);
  const auto draws = load_draws(c, raw);
  const auto file = scenarios_of(c);
  std::filesystem::create_directories(c.out);
  csv::Writer out(c.out / "extinction.csv");
  out.row({"scenario", "median", "lo95", "hi95"});
  for (const auto& s : file.scenarios) {
    const auto r = scenario_extinction(draws, s, raw, file.values);
    out.row({r.scenario, format_fixed17(r.median), format_fixed17(r.lo), format_fixed17(r.hi)});
  }
  out.close();
  write_manifest(c, "extinct", {{"draws", draws.size()}});
  return kOk;
}

int cmd_occupy(const RunConfig& c) {
  const auto raw = load_raw(c);
  const auto draws = load_draws(c, raw);
  const auto file = scenarios_of(c);
  std::filesystem::create_directories(c.out);
  csv::Writer out(c.out / "occupation.csv");
  out.row({"scenario", "Q", "mean", "median", "lo95", "hi95"});
  for (const auto& s : file.scenarios) {
    for (const auto& r : scenario_occupation(draws, s, raw, file.q_list, file.values)) {
      out.row({r.scenario, std::to_string(r.q_count), format_fixed17(r.mean), format_fixed17(r.median),
               format_fixed17(r.lo), format_fixed17(r.hi)});
    }
  }
  out.close();
  write_manifest(c, "occupy", {{"draws", draws.size()}});
  return kOk;
}

int cmd_decompose(const RunConfig& c) {
  const auto raw = load_raw(c);
  const auto centered = center_covariates(raw);
  const auto draws = load_draws(c, raw);
  const auto dec = decompose_mu(draws, centered, components_of(c, raw));
  const std::size_t k = dec.mu.size();
  const int n = raw.n_weeks();
  std::filesystem::create_directories(c.out);

  csv::Writer weekly(c.out / "decomposition.csv");
  weekly.row({"week", "mu_median", "mu_lo95", "mu_hi95", "endemic_median", "endemic_lo95", "endemic_hi95",
              "epidemic_median", "epidemic_lo95", "epidemic_hi95"});
  std::vector<double> col(k);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (const auto* m : {&dec.mu, &dec.endemic, &dec.epidemic}) {
      for (std::size_t s = 0; s < k; ++s) col[s] = (*m)[s][i];
      row.push_back(format_fixed17(quantile(col, 0.5)));
      row.push_back(format_fixed17(quantile(col, 0.025)));
      row.push_back(format_fixed17(quantile(col, 0.975)));
    }
    weekly.row(row);
  }
  weekly.close();

  // Per draw: min, median and max over weeks; then posterior summaries.
  csv::Writer summary(c.out / "decomposition_summary.csv");
  summary.row({"component", "statistic", "scale", "median", "lo95", "hi95"});
  const std::pair<const char*, const std::vector<std::vector<double>>*> parts[] = {{"endemic", &dec.endemic},
                                                                                  {"epidemic", &dec.epidemic}};
  for (const auto& [name, m] : parts) {
    for (const auto& [stat, prob] : {std::pair{"min", 0.0}, std::pair{"median", 0.5}, std::pair{"max", 1.0}}) {
      std::vector<double> v(k), e(k);
      for (std::size_t s = 0; s < k; ++s) {
        v[s] = quantile((*m)[s], prob);
        e[s] = std::exp(v[s]);
      }
      for (const auto& [scale, vals] : {std::pair{"log", &v}, std::pair{"exp", &e}}) {
        summary.row({name, stat, scale, format_fixed17(quantile(*vals, 0.5)), format_fixed17(quantile(*vals, 0.025)),
                     format_fixed17(quantile(*vals, 0.975))});
      }
    }
  }
  summary.close();
  write_manifest(c, "decompose", {{"draws", k}});
  return kOk;
}

int cmd_simulate(const RunConfig& c) {
  if (!c.truth) throw ConfigError("simulate needs a 'truth' file in the config");
  const auto truth = load_truth(*c.truth);
  const auto result = simulate_dataset(truth, c.seed);
  save_dataset(result.dataset, c.out / "dataset");
  save_truth(result, truth, c.seed, c.out / "truth.json");
  write_manifest(c, "simulate", {{"weeks", result.dataset.n_weeks()}, {"total_cases", result.dataset.total_cases()}});
  return kOk;
}

int dispatch(const std::string& command, const std::filesystem::path& config_path, const Overrides& overrides) {
  try {
    const auto config = load_run_config(config_path, overrides);
    std::filesystem::create_directories(config.out);
    if (command == "fit") return cmd_fit(config);
    if (command == "sweep-alpha") return cmd_sweep_alpha(config);
    if (command == "compare-kernels") return cmd_compare_kernels(config);
    if (command == "extinct") return cmd_extinct(config);
    if (command == "occupy") return cmd_occupy(config);
    if (command == "decompose") return cmd_decompose(config);
    if (command == "simulate") return cmd_simulate(config);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
}

}  // namespace epikernel::cli
