#include "epikernel/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "epikernel/error.hpp"

namespace epikernel {

namespace {

constexpr double kTol = 1e-12;

}  // namespace

OffspringSpec OffspringSpec::from_coefficients(std::vector<double> a) {
  if (a.empty()) throw ValidationError("offspring coefficient list is empty");
  double total = 0.0;
  for (double v : a) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("offspring coefficients must be finite and >= 0");
    total += v;
  }
  if (!(total > 0.0)) throw ValidationError("offspring coefficients are all zero");
  OffspringSpec s;
  s.family = Family::power_series;
  s.coefficients = std::move(a);
  return s;
}

OffspringSpec OffspringSpec::from_series(std::function<double(double)> a, double radius) {
  if (!a) throw ValidationError("offspring series function is empty");
  if (!(radius > 0.0)) throw ValidationError("radius of convergence must be positive");
  OffspringSpec s;
  s.family = Family::power_series;
  s.series = std::move(a);
  s.radius = radius;
  return s;
}

double OffspringSpec::evaluate(double x) const {
  if (family == Family::poisson) return std::exp(x);
  if (!coefficients.empty()) {
    double v = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * x + *it;
    return v;
  }
  if (!(x < radius)) throw NumericError("offspring series diverges at " + std::to_string(x));
  const double v = series(x);
  if (!std::isfinite(v)) throw NumericError("offspring series diverges at " + std::to_string(x));
  return v;
}

double extinction_poisson(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
  if (lambda <= 1.0) return 1.0;
  // Work in t = log q so that tiny roots (q ~ e^-lambda) keep full precision:
  // F(t) = t - lambda (e^t - 1) is negative at t = -lambda and positive just
  // below 0.
  auto F = [lambda](double t) { return t - lambda * std::expm1(t); };
  double lo = -lambda;
  double hi = -std::numeric_limits<double>::min();
  while (hi - lo > kTol * 1e-2 * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (F(mid) < 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int k = 0; k < 3; ++k) {
    const double slope = 1.0 - lambda * std::exp(t);
    if (slope == 0.0) break;
    const double next = t - F(t) / slope;
    if (!(next >= lo && next <= hi)) break;
    t = next;
  }
  return std::exp(t);
}

double extinction_power_series(const OffspringSpec& spec, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
  if (spec.family == OffspringSpec::Family::poisson) return extinction_poisson(lambda);
  const double total = spec.evaluate(lambda);
  if (!(total > 0.0)) throw NumericError("offspring series is not positive at lambda");
  // f is the offspring generating function; its smallest fixed point in
  // [0, 1] is the extinction probability.
  auto f = [&](double q) { return spec.evaluate(q * lambda) / total; };
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  // Iterating f from 0 climbs monotonically towards the smallest root.
  double lo = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double next = f(lo);
    if (!(next > lo)) break;
    lo = next;
    if (lo >= 1.0) return 1.0;
  }
  double hi = -1.0;
  for (int j = 1; j <= 50; ++j) {
    const double q = 1.0 - std::ldexp(1.0, -j);
    if (q > lo && f(q) - q < 0.0) {
      hi = q;
      break;
    }
  }
  if (hi < 0.0) return 1.0;
  while (hi - lo > kTol * 1e-1) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double zip_extinction(double q, double p) {
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q must lie in [0, 1]");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
  return std::min(1.0, q + p);
}

double occupation_time(double lambda, int q_count) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
  if (q_count < 1) throw ValidationError("Q must be a positive integer");
  const double q = static_cast<double>(q_count);
  // For lambda > 1 the powers cancel to 1 / (Q lambda).
  if (lambda > 1.0) return 1.0 / (q * lambda);
  return std::pow(lambda, q - 1.0) / q;
}

}  // namespace epikernel
