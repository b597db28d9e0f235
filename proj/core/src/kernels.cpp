#include "epikernel/kernels.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "epikernel/error.hpp"

namespace epikernel {

KernelFamily parse_kernel_family(const std::string& name) {
  if (name.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(name[0]))) {
      case 'A': return KernelFamily::A;
      case 'B': return KernelFamily::B;
      case 'C': return KernelFamily::C;
      case 'D': return KernelFamily::D;
      case 'E': return KernelFamily::E;
      case 'F': return KernelFamily::F;
      default: break;
    }
  }
  throw ValidationError("unknown kernel family '" + name + "' (expected A-F)");
}

std::string to_string(KernelFamily family) {
  return std::string(1, static_cast<char>('A' + static_cast<int>(family)));
}

bool uses_shape(KernelFamily family) {
  return family == KernelFamily::A || family == KernelFamily::B || family == KernelFamily::C;
}

void validate_kernel_params(KernelFamily family, const KernelParams& params) {
  if (!(params.a > 0.0) || !std::isfinite(params.a)) {
    throw ValidationError("kernel scale a must be positive and finite");
  }
  if (uses_shape(family) && !std::isfinite(params.c)) throw ValidationError("kernel shape c must be finite");
  if (family == KernelFamily::C) {
    if (!params.r || !(*params.r >= 0.0) || !std::isfinite(*params.r)) {
      throw ValidationError("kernel C requires a finite r >= 0");
    }
  } else if (params.r) {
    throw ValidationError("r is only defined for kernel C");
  }
}

double kernel_value(KernelSpec spec, const KernelParams& params, double d) {
  validate_kernel_params(spec.family, params);
  if (!(d >= 0.0)) throw ValidationError("kernel distance must be nonnegative");
  const double a = params.a;
  switch (spec.family) {
    case KernelFamily::A:
      return std::pow(1.0 + d / a, -params.c);
    case KernelFamily::B:
      return std::exp(-std::pow(d / a, params.c));
    case KernelFamily::C:
      return std::exp(-std::pow(d / a, params.c)) + *params.r;
    case KernelFamily::D:
      return a * std::exp(-a * d);
    case KernelFamily::E:
      return a / std::sqrt(std::numbers::pi) * std::exp(-a * a * d * d);
    case KernelFamily::F:
      return a / 4.0 * std::exp(-std::sqrt(a * d));
  }
  return 0.0;
}

Regime regime_index(int week, const ChangePoint& cp) {
  return static_cast<double>(week) >= cp.t_change ? Regime::post : Regime::pre;
}

double aggregate_kernel(const DistanceBundle& bundle, int week, KernelSpec spec, const ChangePoint& cp, int y_curr,
                        int y_prev) {
  if (week < 2) throw StructuralError("kernel term is undefined for week 1");
  const auto values = bundle.week_values(week);
  const auto& params = cp.params(regime_index(week, cp));
  if (y_curr == 0) return kernel_value(spec, params, bundle.d_min);
  if (y_prev == 0) return kernel_value(spec, params, 1.0);
  double sum = 0.0;
  for (double d : values) sum += kernel_value(spec, params, d);
  return sum / static_cast<double>(values.size());
}

}  // namespace epikernel
