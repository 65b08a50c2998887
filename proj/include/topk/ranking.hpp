#pragma once

// Plackett-Luce ranking distributions over total orders, evaluated on top-k
// prefixes (the marginal over all completions of the prefix).

#include <span>
#include <vector>

#include "topk/core.hpp"
#include "topk/numeric.hpp"

namespace topk {

// Item fixed effects delta (length m) and optional covariate weights beta
// (length d, empty when the model has no covariates). Utility of item j to
// agent i is delta_j + beta . x_ij.
template <class T>
struct BasicPLParams {
  std::span<T> delta;
  std::span<T> beta;
};
using PLParams = BasicPLParams<const double>;
using PLGradient = BasicPLParams<double>;

// K length strata; orders of length k use bank min(k, K).
struct StratifiedPLParams {
  std::vector<PLParams> banks;

  std::size_t K() const noexcept { return banks.size(); }
  const PLParams& bank_for_length(std::size_t k) const;
};

// 0-based bank index min(k, K) - 1 for a 1-based length or position k >= 1.
inline std::size_t stratum_index(std::size_t k, std::size_t K) {
  return (k < K ? k : K) - 1;
}

double pl_utility(const PLParams& params, const AgentCovariates& x, AltId item);

// Utilities of all m items into `out`.
void pl_utilities(const PLParams& params, const AgentCovariates& x,
                  std::span<double> out);

// log of the probability that the first k choices of a PL ranking are Q.
double pl_log_marginal(const PartialOrder& q, const PLParams& params,
                       const AgentCovariates& x = {});

// Same value; also adds scale * d/dtheta of the log-probability into grad.
double pl_log_marginal_grad(const PartialOrder& q, const PLParams& params,
                            const AgentCovariates& x, double scale,
                            const PLGradient& grad);

double stratified_log_prob(const PartialOrder& q, const StratifiedPLParams& params,
                           const AgentCovariates& x = {});

// Draws `length` items sequentially without replacement.
PartialOrder sample_pl_prefix(const PLParams& params, const AgentCovariates& x,
                              std::size_t length, Rng& rng);

}  // namespace topk
