#include "epikernel/draws_io.hpp"

#include <algorithm>

#include "epikernel/csv.hpp"
#include "epikernel/error.hpp"

namespace epikernel {

namespace {

void block_names(const ParameterLayout& l, const std::string& prefix, std::vector<std::string>& out) {
  for (int j = 0; j <= l.p; ++j) out.push_back(prefix + "beta" + std::to_string(j));
  for (int j = 1; j <= l.p; ++j) out.push_back(prefix + "gamma" + std::to_string(j));
  out.push_back(prefix + "ar_coef");
  if (l.kernel) out.push_back(prefix + "kernel_coef");
  for (int y = 1; y <= l.n_years; ++y) out.push_back(prefix + "b" + std::to_string(y));
  out.push_back(prefix + "sigma_b");
  if (l.kernel) {
    for (const char* regime : {"kpre_", "kpost_"}) {
      out.push_back(prefix + regime + "a");
      if (uses_shape(*l.kernel)) out.push_back(prefix + regime + "c");
      if (*l.kernel == KernelFamily::C) out.push_back(prefix + regime + "r");
    }
  }
}

void block_flatten(const ParameterLayout& l, const RegressionBlock& b, std::vector<double>& out) {
  for (int j = 0; j <= l.p; ++j) out.push_back(b.beta(j));
  for (int j = 0; j < l.p; ++j) out.push_back(b.gamma[j]);
  out.push_back(b.ar_coef);
  if (l.kernel) out.push_back(b.kernel_coef);
  for (int y = 0; y < l.n_years; ++y) out.push_back(b.random_effects(y));
  out.push_back(b.sigma_b);
  if (l.kernel) {
    for (const auto* k : {&b.kernel.pre, &b.kernel.post}) {
      out.push_back(k->a);
      if (uses_shape(*l.kernel)) out.push_back(k->c);
      if (*l.kernel == KernelFamily::C) out.push_back(k->r.value_or(0.0));
    }
  }
}

RegressionBlock block_unflatten(const ParameterLayout& l, std::span<const double> v, std::size_t& at) {
  RegressionBlock b;
  b.beta.resize(l.p + 1);
  for (int j = 0; j <= l.p; ++j) b.beta(j) = v[at++];
  b.gamma.resize(l.p);
  for (int j = 0; j < l.p; ++j) b.gamma[j] = v[at++] != 0.0 ? 1 : 0;
  b.ar_coef = v[at++];
  if (l.kernel) b.kernel_coef = v[at++];
  b.random_effects.resize(l.n_years);
  for (int y = 0; y < l.n_years; ++y) b.random_effects(y) = v[at++];
  b.sigma_b = v[at++];
  if (l.kernel) {
    for (auto* k : {&b.kernel.pre, &b.kernel.post}) {
      k->a = v[at++];
      if (uses_shape(*l.kernel)) k->c = v[at++];
      if (*l.kernel == KernelFamily::C) k->r = v[at++];
    }
  }
  return b;
}

RegressionBlock empty_block(const ParameterLayout& l) {
  RegressionBlock b;
  b.beta = Eigen::VectorXd::Zero(l.p + 1);
  b.gamma.assign(l.p, 0);
  b.random_effects = Eigen::VectorXd::Zero(l.n_years);
  return b;
}

}  // namespace

ParameterLayout ParameterLayout::of(const ModelSpec& spec, int p, int n_years) {
  return ParameterLayout{p, n_years, spec.kernel, spec.zero_inflated};
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  block_names(*this, "", out);
  if (zero_inflated) block_names(*this, "z_", out);
  if (kernel) out.push_back("t_change");
  out.push_back("phi");
  out.push_back("g");
  return out;
}

std::vector<double> ParameterLayout::flatten(const ModelState& state) const {
  std::vector<double> out;
  block_flatten(*this, state.rate, out);
  if (zero_inflated) block_flatten(*this, state.zero, out);
  if (kernel) out.push_back(state.rate.kernel.t_change);
  out.push_back(state.ou.phi());
  out.push_back(state.g);
  return out;
}

ModelState ParameterLayout::unflatten(std::span<const double> values) const {
  if (values.size() != names().size()) throw DimensionError("parameter vector length does not match the layout");
  std::size_t at = 0;
  ModelState s;
  s.rate = block_unflatten(*this, values, at);
  s.zero = zero_inflated ? block_unflatten(*this, values, at) : empty_block(*this);
  if (kernel) {
    const double t = values[at++];
    s.rate.kernel.t_change = t;
    s.zero.kernel.t_change = t;
  }
  s.ou = OUParams::from_phi(values[at++]);
  s.g = values[at++];
  return s;
}

void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws, const ParameterLayout& layout) {
  csv::Writer out(path);
  std::vector<std::string> header{"chain", "draw", "deviance"};
  for (auto& name : layout.names()) header.push_back(name);
  out.row(header);
  long within = 0;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    if (k > 0 && draws.chain[k] != draws.chain[k - 1]) within = 0;
    std::vector<std::string> row{std::to_string(draws.chain[k]), std::to_string(++within),
                                 csv::format_fixed17(draws.deviance[k])};
    for (double v : layout.flatten(draws.states[k])) row.push_back(csv::format_fixed17(v));
    out.row(row);
  }
  out.close();
}

PosteriorDraws read_draws(const std::filesystem::path& path, std::optional<KernelFamily> kernel,
                          ParameterLayout* layout_out) {
  const auto table = csv::read(path);
  const auto& h = table.header;
  if (h.size() < 3 || h[0] != "chain" || h[1] != "draw" || h[2] != "deviance") {
    throw ParseError(path.string() + ": expected leading columns chain,draw,deviance");
  }
  auto has = [&](const std::string& name) { return std::find(h.begin(), h.end(), name) != h.end(); };
  auto count_prefixed = [&](const std::string& stem) {
    int k = 0;
    while (has(stem + std::to_string(k + 1))) ++k;
    return k;
  };
  ParameterLayout layout;
  layout.p = count_prefixed("beta");
  layout.n_years = count_prefixed("b");
  layout.zero_inflated = has("z_beta0");
  layout.kernel = kernel;
  const auto names = layout.names();
  if (names.size() + 3 != h.size() || !std::equal(names.begin(), names.end(), h.begin() + 3)) {
    throw DimensionError(path.string() + ": columns do not match the expected layout for kernel " +
                         (kernel ? to_string(*kernel) : std::string("none")));
  }
  PosteriorDraws draws;
  draws.spec = layout.spec();
  std::vector<double> values(names.size());
  int max_chain = -1;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int chain = static_cast<int>(table.integer(r, 0));
    if (chain < 0) throw ParseError(path.string() + ": negative chain index");
    max_chain = std::max(max_chain, chain);
    draws.chain.push_back(chain);
    draws.deviance.push_back(table.number(r, 2));
    for (std::size_t c = 0; c < names.size(); ++c) values[c] = table.number(r, c + 3);
    draws.states.push_back(layout.unflatten(values));
  }
  draws.acceptance.resize(static_cast<std::size_t>(max_chain + 1));
  if (layout_out) *layout_out = layout;
  return draws;
}

}  // namespace epikernel
