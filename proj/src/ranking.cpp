#include "topk/ranking.hpp"

#include <stdexcept>

namespace topk {

namespace {

void check_shapes(const PLParams& p, const AgentCovariates& x) {
  if (p.beta.empty()) return;
  if (x.empty()) throw InputError("covariate weights present but no covariates given");
  if (x.d != p.beta.size()) {
    throw InputError("covariate dimension " + std::to_string(x.d) +
                     " does not match beta of length " + std::to_string(p.beta.size()));
  }
}

}  // namespace

const PLParams& StratifiedPLParams::bank_for_length(std::size_t k) const {
  if (banks.empty()) throw std::logic_error("stratified params without banks");
  return banks[stratum_index(k, banks.size())];
}

double pl_utility(const PLParams& params, const AgentCovariates& x, AltId item) {
  check_shapes(params, x);
  double u = params.delta[item - 1];
  if (!params.beta.empty()) {
    const auto feat = x.item(item);
    for (std::size_t f = 0; f < feat.size(); ++f) u += params.beta[f] * feat[f];
  }
  return u;
}

void pl_utilities(const PLParams& params, const AgentCovariates& x,
                  std::span<double> out) {
  check_shapes(params, x);
  const std::size_t m = params.delta.size();
  for (std::size_t j = 0; j < m; ++j) {
    double u = params.delta[j];
    if (!params.beta.empty()) {
      const auto feat = x.item(static_cast<AltId>(j + 1));
      for (std::size_t f = 0; f < feat.size(); ++f) u += params.beta[f] * feat[f];
    }
    out[j] = u;
  }
}

double pl_log_marginal(const PartialOrder& q, const PLParams& params,
                       const AgentCovariates& x) {
  return pl_log_marginal_grad(q, params, x, 0.0, PLGradient{});
}

double pl_log_marginal_grad(const PartialOrder& q, const PLParams& params,
                            const AgentCovariates& x, double scale,
                            const PLGradient& grad) {
  const std::size_t m = params.delta.size();
  std::vector<double> u(m);
  pl_utilities(params, x, u);
  std::vector<char> available(m, 1);
  const bool want_grad = !grad.delta.empty();
  std::vector<double> du(want_grad ? m : 0, 0.0);

  double logp = 0.0;
  for (AltId id : q) {
    logp += choice_log_prob(u, available, id - 1, du, scale);
    available[id - 1] = 0;
  }
  if (want_grad) {
    for (std::size_t j = 0; j < m; ++j) grad.delta[j] += du[j];
    if (!params.beta.empty()) {
      for (std::size_t j = 0; j < m; ++j) {
        if (du[j] == 0.0) continue;
        const auto feat = x.item(static_cast<AltId>(j + 1));
        for (std::size_t f = 0; f < feat.size(); ++f) grad.beta[f] += du[j] * feat[f];
      }
    }
  }
  return logp;
}

double stratified_log_prob(const PartialOrder& q, const StratifiedPLParams& params,
                           const AgentCovariates& x) {
  return pl_log_marginal(q, params.bank_for_length(q.length()), x);
}

PartialOrder sample_pl_prefix(const PLParams& params, const AgentCovariates& x,
                              std::size_t length, Rng& rng) {
  const std::size_t m = params.delta.size();
  std::vector<double> u(m);
  pl_utilities(params, x, u);
  std::vector<char> available(m, 1);
  std::vector<AltId> items;
  items.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t a = sample_choice(u, available, rng);
    available[a] = 0;
    items.push_back(static_cast<AltId>(a + 1));
  }
  return PartialOrder(std::move(items));
}

}  // namespace topk
