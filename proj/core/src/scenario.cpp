#include "epikernel/scenario.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "epikernel/branching.hpp"
#include "epikernel/error.hpp"
#include "epikernel/kernels.hpp"
#include "epikernel/summary.hpp"

namespace epikernel {

namespace {

const char* kind_name(CovariateSetting::Kind kind) {
  switch (kind) {
    case CovariateSetting::Kind::min: return "min";
    case CovariateSetting::Kind::median: return "median";
    case CovariateSetting::Kind::max: return "max";
    case CovariateSetting::Kind::fixed: return "fixed";
  }
  return "";
}

double column_stat(std::span<const double> column, CovariateSetting::Kind kind) {
  switch (kind) {
    case CovariateSetting::Kind::min: return quantile(column, 0.0);
    case CovariateSetting::Kind::max: return quantile(column, 1.0);
    default: return quantile(column, 0.5);
  }
}

double resolve_value(const std::string& name, const CovariateSetting& setting, std::span<const double> column,
                     const ScenarioValues& values) {
  if (setting.kind == CovariateSetting::Kind::fixed) return setting.value;
  auto it = values.find(name);
  if (it != values.end()) {
    auto jt = it->second.find(kind_name(setting.kind));
    if (jt != it->second.end()) return jt->second;
  }
  return column_stat(column, setting.kind);
}

std::vector<double> column_of(const Dataset& d, int j) {
  std::vector<double> v(d.n_weeks());
  for (int i = 0; i < d.n_weeks(); ++i) v[i] = d.design(i, j);
  return v;
}

double block_at(const RegressionBlock& b, const ModelSpec& spec, const ScenarioPoint& point) {
  double eta = b.beta(0);
  for (int j = 0; j < point.x.size(); ++j) {
    if (b.gamma[j]) eta += b.beta(j + 1) * point.x(j);
  }
  eta += b.ar_coef * point.y_prev;
  if (spec.kernel) eta += b.kernel_coef * kernel_value(KernelSpec{*spec.kernel}, b.kernel.post, point.distance);
  return eta;
}

double draw_extinction(const ModelState& s, const ModelSpec& spec, const ScenarioPoint& point) {
  const double lambda = std::exp(scenario_rate_predictor(s, spec, point));
  const double p = spec.zero_inflated ? logistic(scenario_zero_predictor(s, spec, point)) : 0.0;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw NumericError("scenario offspring mean is not finite for a posterior draw");
  }
  return zip_extinction(extinction_poisson(lambda), p);
}

void require_draws(const PosteriorDraws& draws) {
  if (draws.size() == 0) throw ValidationError("scenario analysis needs at least one posterior draw");
}

}  // namespace

CovariateSetting CovariateSetting::parse(const std::string& text) {
  if (text == "min") return {Kind::min, 0.0};
  if (text == "median") return {Kind::median, 0.0};
  if (text == "max") return {Kind::max, 0.0};
  throw ValidationError("scenario setting must be min, median, max or a number; got '" + text + "'");
}

ScenarioValues default_scenario_values() {
  return {
      {"max_temp", {{"min", -5.5}, {"median", 23.1}, {"max", 40.7}}},
      {"avg_humidity", {{"min", 14.0}, {"median", 65.0}, {"max", 100.0}}},
      {kDistanceKey, {{"min", 0.02}, {"median", 16.26}, {"max", 45.0}}},
  };
}

std::vector<ScenarioSpec> default_scenarios() {
  using K = CovariateSetting::Kind;
  std::vector<ScenarioSpec> out;
  out.push_back({"all-median", {}, 1});
  const std::pair<const char*, const char*> swept[] = {
      {"maxtemp", "max_temp"}, {"humidity", "avg_humidity"}, {"distance", kDistanceKey}};
  for (const auto& [label, key] : swept) {
    for (K kind : {K::min, K::max}) {
      out.push_back({std::string(label) + "-" + kind_name(kind), {{key, {kind, 0.0}}}, 1});
    }
  }
  return out;
}

ScenarioPoint resolve_scenario(const ScenarioSpec& scenario, const Dataset& raw, const ScenarioValues& values) {
  for (const auto& [name, setting] : scenario.settings) {
    if (name != kDistanceKey && raw.covariate_index(name) < 0) {
      throw ConfigError("scenario '" + scenario.name + "' sets '" + name + "', which is not a fitted covariate");
    }
  }
  if (scenario.y_prev < 0) throw ValidationError("scenario y_prev must be nonnegative");
  const int p = raw.n_covariates();
  const Eigen::VectorXd means = covariate_means(raw);
  ScenarioPoint point;
  point.x.resize(p);
  point.y_prev = scenario.y_prev;
  for (int j = 1; j <= p; ++j) {
    const auto& name = raw.covariate_names[j - 1];
    auto it = scenario.settings.find(name);
    const CovariateSetting setting = it != scenario.settings.end() ? it->second : CovariateSetting{};
    point.x(j - 1) = resolve_value(name, setting, column_of(raw, j), values) - means(j - 1);
  }
  auto it = scenario.settings.find(kDistanceKey);
  const CovariateSetting setting = it != scenario.settings.end() ? it->second : CovariateSetting{};
  point.distance = resolve_value(kDistanceKey, setting, raw.distances.flat, values);
  if (!(point.distance >= 0.0)) throw ValidationError("scenario distance must be nonnegative");
  return point;
}

double scenario_rate_predictor(const ModelState& state, const ModelSpec& spec, const ScenarioPoint& point) {
  return block_at(state.rate, spec, point);
}

double scenario_zero_predictor(const ModelState& state, const ModelSpec& spec, const ScenarioPoint& point) {
  return block_at(state.zero, spec, point);
}

ExtinctionResult scenario_extinction(const PosteriorDraws& draws, const ScenarioSpec& scenario, const Dataset& raw,
                                     const ScenarioValues& values) {
  require_draws(draws);
  const auto point = resolve_scenario(scenario, raw, values);
  ExtinctionResult r;
  r.scenario = scenario.name;
  r.q.reserve(draws.size());
  for (const auto& s : draws.states) r.q.push_back(draw_extinction(s, draws.spec, point));
  r.median = quantile(r.q, 0.5);
  r.lo = quantile(r.q, 0.025);
  r.hi = quantile(r.q, 0.975);
  return r;
}

std::vector<OccupationResult> scenario_occupation(const PosteriorDraws& draws, const ScenarioSpec& scenario,
                                                  const Dataset& raw, const std::vector<int>& q_list,
                                                  const ScenarioValues& values) {
  require_draws(draws);
  if (q_list.empty()) throw ValidationError("occupation analysis needs at least one Q");
  const auto point = resolve_scenario(scenario, raw, values);
  std::vector<double> lambda;
  lambda.reserve(draws.size());
  for (const auto& s : draws.states) lambda.push_back(std::exp(scenario_rate_predictor(s, draws.spec, point)));
  std::vector<OccupationResult> out;
  for (int q : q_list) {
    std::vector<double> v;
    v.reserve(lambda.size());
    double sum = 0.0;
    for (double l : lambda) {
      v.push_back(occupation_time(l, q));
      sum += v.back();
    }
    out.push_back({scenario.name, q, sum / static_cast<double>(v.size()), quantile(v, 0.5), quantile(v, 0.025),
                   quantile(v, 0.975)});
  }
  return out;
}

ComponentMap default_component_map(const Dataset& dataset) {
  ComponentMap map{{"intercept", Component::endemic},
                   {"random_effect", Component::endemic},
                   {"ar", Component::epidemic},
                   {"kernel", Component::epidemic}};
  for (const auto& name : dataset.covariate_names) {
    map[name] = name == "villages_prev_week" ? Component::epidemic : Component::endemic;
  }
  return map;
}

Decomposition decompose_mu(const PosteriorDraws& draws, const Dataset& dataset, const ComponentMap& map) {
  require_draws(draws);
  auto component = [&](const std::string& term) {
    auto it = map.find(term);
    if (it == map.end()) throw ConfigError("term '" + term + "' of mu is not assigned to a component");
    return it->second;
  };
  const int p = dataset.n_covariates();
  const Component c_intercept = component("intercept");
  const Component c_random = component("random_effect");
  const Component c_ar = component("ar");
  const Component c_kernel = component("kernel");
  std::vector<Component> c_cov(p);
  for (int j = 0; j < p; ++j) c_cov[j] = component(dataset.covariate_names[j]);

  const int n = dataset.n_weeks();
  const auto& spec = draws.spec;
  Decomposition out;
  for (const auto& s : draws.states) {
    std::vector<double> endemic(n), epidemic(n), mu(n);
    for (int week = 1; week <= n; ++week) {
      const int i = week - 1;
      double part[2] = {0.0, 0.0};
      auto add = [&](Component c, double v) { part[c == Component::endemic ? 0 : 1] += v; };
      add(c_intercept, s.rate.beta(0));
      for (int j = 1; j <= p; ++j) {
        if (s.rate.gamma[j - 1]) add(c_cov[j - 1], s.rate.beta(j) * dataset.design(i, j));
      }
      add(c_random, s.rate.random_effects(dataset.years[i] - 1));
      if (week >= 2) {
        add(c_ar, s.rate.ar_coef * dataset.counts[i - 1]);
        if (spec.kernel) {
          add(c_kernel, s.rate.kernel_coef * aggregate_kernel(dataset.distances, week, KernelSpec{*spec.kernel},
                                                              s.rate.kernel, dataset.counts[i],
                                                              dataset.counts[i - 1]));
        }
      }
      endemic[i] = part[0];
      epidemic[i] = part[1];
      mu[i] = rate_predictor(s, dataset, week, spec.kernel);
    }
    out.endemic.push_back(std::move(endemic));
    out.epidemic.push_back(std::move(epidemic));
    out.mu.push_back(std::move(mu));
  }
  return out;
}

ScenarioFile load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ScenarioFile file;
  try {
    file.values = default_scenario_values();
    if (j.contains("values")) {
      for (const auto& [name, stats] : j.at("values").items()) {
        for (const auto& [stat, v] : stats.items()) file.values[name][stat] = v.get<double>();
      }
    }
    for (const auto& [name, stats] : file.values) {
      auto get = [&](const char* k) { return stats.count(k) ? stats.at(k) : std::nan(""); };
      const double lo = get("min"), mid = get("median"), hi = get("max");
      if (!std::isnan(lo) && !std::isnan(mid) && !std::isnan(hi) && !(lo <= mid && mid <= hi)) {
        throw ValidationError("scenario values for '" + name + "' violate min <= median <= max");
      }
    }
    if (j.contains("scenarios")) {
      for (const auto& s : j.at("scenarios")) {
        ScenarioSpec spec;
        spec.name = s.at("name").get<std::string>();
        spec.y_prev = s.value("y_prev", 1);
        if (s.contains("settings")) {
          for (const auto& [name, v] : s.at("settings").items()) {
            spec.settings[name] = v.is_number() ? CovariateSetting{CovariateSetting::Kind::fixed, v.get<double>()}
                                                : CovariateSetting::parse(v.get<std::string>());
          }
        }
        file.scenarios.push_back(std::move(spec));
      }
    } else {
      file.scenarios = default_scenarios();
    }
    file.q_list = j.value("q", std::vector<int>{1, 2, 3, 4, 5, 10});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return file;
}

}  // namespace epikernel
