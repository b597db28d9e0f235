#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace epikernel {

/// Offspring law P(Z = r) = a_r lambda^r / A(lambda).
struct OffspringSpec {
  enum class Family { poisson, power_series };
  Family family = Family::poisson;
  /// Finite coefficient list a_0, a_1, ...; A is then a polynomial.
  std::vector<double> coefficients;
  /// Closed-form A, used when `coefficients` is empty.
  std::function<double(double)> series;
  /// Radius of convergence of the closed form.
  double radius = std::numeric_limits<double>::infinity();

  static OffspringSpec poisson() { return {}; }
  static OffspringSpec from_coefficients(std::vector<double> a);
  static OffspringSpec from_series(std::function<double(double)> a, double radius);

  double evaluate(double x) const;
};

/// Smallest root in (0, 1] of exp(q lambda) = q exp(lambda); exactly 1 for
/// lambda <= 1.
double extinction_poisson(double lambda);

/// Smallest root in (0, 1] of A(q lambda) = q A(lambda).
double extinction_power_series(const OffspringSpec& spec, double lambda);

/// Extinction under zero inflation: min(1, q + p).
double zip_extinction(double q, double p);

/// Expected time with exactly Q infected: lambda^(Q-1) / (Q max(1, lambda)^Q).
double occupation_time(double lambda, int q_count);

}  // namespace epikernel
