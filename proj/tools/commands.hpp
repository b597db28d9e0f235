#pragma once

#include <string>

#include "run_config.hpp"

namespace epikernel::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

int cmd_fit(const RunConfig& config);
int cmd_sweep_alpha(const RunConfig& config);
int cmd_compare_kernels(const RunConfig& config);
int cmd_extinct(const RunConfig& config);
int cmd_occupy(const RunConfig& config);
int cmd_decompose(const RunConfig& config);
int cmd_simulate(const RunConfig& config);

/// Runs `command` with `config`, mapping library errors to exit codes and
/// printing the message to stderr.
int dispatch(const std::string& command, const std::filesystem::path& config_path, const Overrides& overrides);

}  // namespace epikernel::cli
