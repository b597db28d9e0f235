#pragma once

#include <cstdint>
#include <random>

namespace epikernel {

/// Random stream used by every stochastic routine.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All variate transforms are implemented here rather than taken
/// from <random>, because the standard distributions are
/// implementation-defined and would break seeded reproducibility across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, 1) via Marsaglia and Tsang.
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }
  std::int64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Independent sub-stream seed for chain or replicate `stream`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace epikernel
