#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epikernel/kernels.hpp"
#include "epikernel/model.hpp"
#include "epikernel/sampler.hpp"

namespace epikernel {

/// Named scalar columns of a ModelState, in draws.csv order:
///   beta0..betaP, gamma1..gammaP, ar_coef, [kernel_coef], b1..bY, sigma_b,
///   [kpre_a, kpre_c, kpre_r, kpost_a, kpost_c, kpost_r], then the same
///   with a z_ prefix for the zero block, then [t_change], phi, g.
/// Bracketed columns appear only when the model has a kernel (c and r only
/// for families that use them). The latent path is not part of the layout.
struct ParameterLayout {
  int p = 0;
  int n_years = 0;
  std::optional<KernelFamily> kernel;
  bool zero_inflated = true;

  static ParameterLayout of(const ModelSpec& spec, int p, int n_years);
  ModelSpec spec() const { return {kernel, zero_inflated}; }
  std::vector<std::string> names() const;
  std::vector<double> flatten(const ModelState& state) const;
  /// Inverse of flatten; the latent path comes back empty.
  ModelState unflatten(std::span<const double> values) const;
};

/// Writes chain, draw, deviance and the layout columns, one row per draw.
void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws, const ParameterLayout& layout);

/// Reads a draws.csv back. `kernel` names the family the draws were fitted
/// with; the columns must agree with it.
PosteriorDraws read_draws(const std::filesystem::path& path, std::optional<KernelFamily> kernel,
                          ParameterLayout* layout = nullptr);

}  // namespace epikernel
