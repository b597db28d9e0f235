#include "epikernel/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "epikernel/error.hpp"

namespace epikernel {

namespace {

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

std::map<int, std::vector<double>> by_chain(std::span<const double> values, std::span<const int> chain) {
  if (values.size() != chain.size()) throw DimensionError("values and chain labels differ in length");
  std::map<int, std::vector<double>> out;
  for (std::size_t k = 0; k < values.size(); ++k) out[chain[k]].push_back(values[k]);
  return out;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double quantile(std::span<const double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile probability must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double batch_means_mcse(std::span<const double> values, std::span<const int> chain) {
  std::vector<double> batch_means;
  for (const auto& [c, v] : by_chain(values, chain)) {
    const auto size = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(v.size()))));
    if (size == 0) continue;
    for (std::size_t start = 0; start + size <= v.size(); start += size) {
      batch_means.push_back(mean_of(std::span(v).subspan(start, size)));
    }
  }
  if (batch_means.size() < 2) return nan();
  return std::sqrt(var_of(batch_means) / static_cast<double>(batch_means.size()));
}

double split_rhat(std::span<const double> values, std::span<const int> chain) {
  std::vector<std::vector<double>> halves;
  for (const auto& [c, v] : by_chain(values, chain)) {
    const std::size_t half = v.size() / 2;
    if (half < 2) return nan();
    halves.emplace_back(v.begin(), v.begin() + half);
    halves.emplace_back(v.end() - half, v.end());
  }
  if (halves.empty()) return nan();
  const std::size_t len = std::min_element(halves.begin(), halves.end(), [](auto& a, auto& b) {
                            return a.size() < b.size();
                          })->size();
  for (auto& h : halves) h.resize(len);
  std::vector<double> means;
  double within = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    within += var_of(h);
  }
  within /= static_cast<double>(halves.size());
  const double between = static_cast<double>(len) * var_of(means);
  if (within <= 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double n = static_cast<double>(len);
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

ParamSummary summarize_values(const std::string& name, std::span<const double> values, std::span<const int> chain,
                              double level) {
  if (values.empty()) throw ValidationError("cannot summarize an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible level must lie in (0, 1)");
  ParamSummary s;
  s.name = name;
  s.mean = mean_of(values);
  s.sd = std::sqrt(var_of(values));
  s.median = quantile(values, 0.5);
  s.lo = quantile(values, (1.0 - level) / 2.0);
  s.hi = quantile(values, 1.0 - (1.0 - level) / 2.0);
  s.mcse = batch_means_mcse(values, chain);
  s.rhat = split_rhat(values, chain);
  return s;
}

std::vector<ParamSummary> summarize(const PosteriorDraws& draws, const ParameterLayout& layout, double level) {
  if (draws.size() == 0) throw ValidationError("no posterior draws to summarize");
  const auto names = layout.names();
  std::vector<std::vector<double>> columns(names.size());
  for (const auto& s : draws.states) {
    const auto flat = layout.flatten(s);
    for (std::size_t c = 0; c < flat.size(); ++c) columns[c].push_back(flat[c]);
  }
  std::vector<ParamSummary> out;
  for (std::size_t c = 0; c < names.size(); ++c) out.push_back(summarize_values(names[c], columns[c], draws.chain, level));
  return out;
}

InclusionProbabilities inclusion_probabilities(const PosteriorDraws& draws) {
  if (draws.size() == 0) throw ValidationError("no posterior draws");
  const std::size_t p = draws.states.front().rate.gamma.size();
  InclusionProbabilities out{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (const auto& s : draws.states) {
    for (std::size_t j = 0; j < p; ++j) {
      out.rate[j] += s.rate.gamma[j];
      out.zero[j] += s.zero.gamma[j];
    }
  }
  const double k = static_cast<double>(draws.size());
  for (std::size_t j = 0; j < p; ++j) {
    out.rate[j] /= k;
    out.zero[j] /= k;
  }
  return out;
}

double mean_deviance(const PosteriorDraws& draws) {
  if (draws.deviance.empty()) throw ValidationError("no posterior draws");
  return mean_of(draws.deviance);
}

}  // namespace epikernel
