#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epikernel/model.hpp"
#include "epikernel/priors.hpp"
#include "epikernel/sampler.hpp"

namespace epikernel::cli {

/// Everything a command needs, after flag overrides.
struct RunConfig {
  std::filesystem::path config_path;
  std::filesystem::path dataset;
  bool strict = false;
  ModelSpec model;
  PriorConfig prior;
  McmcConfig mcmc;
  /// Pilot run for the EIU prior; defaults to `mcmc`.
  McmcConfig eiu_pilot;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  std::vector<double> alphas;
  std::vector<std::string> families;
  std::filesystem::path draws;
  std::optional<std::filesystem::path> scenarios;
  std::optional<std::filesystem::path> truth;
  nlohmann::json components;
  /// Effective configuration, hashed into the run manifest.
  nlohmann::json effective;
};

/// Command-line overrides; unset fields keep the file's values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> kernel;
  std::optional<std::string> prior;
  std::optional<double> alpha;
  std::optional<std::string> model_space;
  std::optional<std::string> exp_sign;
};

/// Throws ConfigError on unreadable or malformed files and bad values.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides);

/// "A".."F" or "none".
std::optional<KernelFamily> parse_kernel_choice(const std::string& text);
std::string kernel_label(const std::optional<KernelFamily>& kernel);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace epikernel::cli
