#pragma once

#include <optional>
#include <string>

#include "epikernel/data.hpp"

namespace epikernel {

/// Transmission kernel families:
///   A  (1 + d/a)^(-c)
///   B  exp(-(d/a)^c)
///   C  exp(-(d/a)^c) + r
///   D  a exp(-a d)
///   E  a / sqrt(pi) exp(-a^2 d^2)
///   F  a / 4 exp(-sqrt(a d))
enum class KernelFamily { A, B, C, D, E, F };

struct KernelSpec {
  KernelFamily family = KernelFamily::A;
};

/// Parses "A".."F" (case-insensitive); throws ValidationError otherwise.
KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);
/// Whether the family uses the shape parameter c.
bool uses_shape(KernelFamily family);

struct KernelParams {
  double a = 1.0;
  double c = 1.0;
  /// Long-range floor, family C only.
  std::optional<double> r;
};

/// Throws ValidationError when `params` are invalid for `family`.
void validate_kernel_params(KernelFamily family, const KernelParams& params);

enum class Regime { pre, post };

/// Kernel parameters before and after a single change week.
struct ChangePoint {
  double t_change = 50.0;
  KernelParams pre;
  KernelParams post;

  const KernelParams& params(Regime regime) const { return regime == Regime::pre ? pre : post; }
  KernelParams& params(Regime regime) { return regime == Regime::pre ? pre : post; }
};

double kernel_value(KernelSpec spec, const KernelParams& params, double d);

/// A week at or after the change point belongs to the post regime.
Regime regime_index(int week, const ChangePoint& cp);

/// Weekly kernel term: the mean kernel over the week's cross distances when
/// both this and last week had cases, the kernel at 1 km when only this week
/// had cases, and the kernel at d_min when this week had none.
double aggregate_kernel(const DistanceBundle& bundle, int week, KernelSpec spec, const ChangePoint& cp, int y_curr,
                        int y_prev);

}  // namespace epikernel
