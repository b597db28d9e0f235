#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epikernel/data.hpp"
#include "epikernel/sampler.hpp"

namespace epikernel {

/// Name under which a scenario sets the kernel distance in km.
inline constexpr const char* kDistanceKey = "distance";

struct CovariateSetting {
  enum class Kind { min, median, max, fixed };
  Kind kind = Kind::median;
  double value = 0.0;

  static CovariateSetting parse(const std::string& text);
};

/// Reference min/median/max per covariate (or "distance"). Covariates not
/// listed fall back to their range in the dataset.
using ScenarioValues = std::map<std::string, std::map<std::string, double>>;

/// Min, median and max of maximum temperature, humidity and distance for
/// the 2012 farm census.
ScenarioValues default_scenario_values();

struct ScenarioSpec {
  std::string name;
  /// Covariates (and "distance") set away from their median.
  std::map<std::string, CovariateSetting> settings;
  /// Last week's count entering the lag term.
  int y_prev = 1;
};

/// Settings of the standard table: each of maximum temperature, humidity
/// and distance at min and max, plus everything at the median.
std::vector<ScenarioSpec> default_scenarios();

/// Covariate row in the centered design plus the kernel distance.
struct ScenarioPoint {
  Eigen::VectorXd x;
  double distance = 0.0;
  int y_prev = 1;
};

/// Resolves a scenario against the raw (uncentered) dataset: unset
/// covariates sit at their median, everything is centered with the dataset
/// means. Throws ConfigError for names that are not covariates.
ScenarioPoint resolve_scenario(const ScenarioSpec& scenario, const Dataset& raw, const ScenarioValues& values);

/// Rate and zero-inflation predictors at a scenario for one draw, without
/// random effect or latent noise and with the post-change kernel.
double scenario_rate_predictor(const ModelState& state, const ModelSpec& spec, const ScenarioPoint& point);
double scenario_zero_predictor(const ModelState& state, const ModelSpec& spec, const ScenarioPoint& point);

struct ExtinctionResult {
  std::string scenario;
  std::vector<double> q;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

ExtinctionResult scenario_extinction(const PosteriorDraws& draws, const ScenarioSpec& scenario, const Dataset& raw,
                                     const ScenarioValues& values = default_scenario_values());

struct OccupationResult {
  std::string scenario;
  int q_count = 1;
  double mean = 0.0;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<OccupationResult> scenario_occupation(const PosteriorDraws& draws, const ScenarioSpec& scenario,
                                                  const Dataset& raw, const std::vector<int>& q_list,
                                                  const ScenarioValues& values = default_scenario_values());

enum class Component { endemic, epidemic };

/// Assignment of every term of mu to a component. Terms are "intercept",
/// "random_effect", "ar", "kernel" and each covariate name.
using ComponentMap = std::map<std::string, Component>;

/// Intercept, yearly effects and covariates are endemic, except
/// villages_prev_week; the lag and kernel terms are epidemic.
ComponentMap default_component_map(const Dataset& dataset);

struct Decomposition {
  /// [draw][week] values; endemic + epidemic reproduces mu.
  std::vector<std::vector<double>> endemic;
  std::vector<std::vector<double>> epidemic;
  std::vector<std::vector<double>> mu;
};

/// Splits mu of every draw and week. `dataset` must be the one the draws
/// were fitted on.
Decomposition decompose_mu(const PosteriorDraws& draws, const Dataset& dataset, const ComponentMap& map);

/// JSON scenario file: {"scenarios": [{"name": ..., "settings": {...},
/// "y_prev": 1}], "values": {...}, "q": [...]}.
struct ScenarioFile {
  std::vector<ScenarioSpec> scenarios;
  ScenarioValues values;
  std::vector<int> q_list;
};
ScenarioFile load_scenarios(const std::filesystem::path& path);

}  // namespace epikernel
