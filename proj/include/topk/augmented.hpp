#pragma once

// Augmented ranking models: a sequential choice process over the alternatives
// plus an END token whose selection terminates the list.
//
//   A     one PL over m+1 alternatives (END utility is theta[m])
//   A-PD  item utilities theta (m), END utility gamma_j at position j
//   A-S   K banks over m+1 alternatives; position j uses bank min(j, K)
//
// END is in every choice set, including the first, so the empty list has
// positive mass. Once all m items are listed, END is forced and contributes
// no factor. Item utilities may be covariate-linear (delta_j + beta . x_ij);
// END never receives covariates.

#include <vector>

#include "topk/core.hpp"
#include "topk/numeric.hpp"

namespace topk {

enum class AugmentedVariant { a, apd, as };

template <class T>
struct BasicAugmentedNaiveParams {
  std::span<T> theta;  // m items, then END
  std::span<T> beta;
};
using AugmentedNaiveParams = BasicAugmentedNaiveParams<const double>;
using AugmentedNaiveGradient = BasicAugmentedNaiveParams<double>;

template <class T>
struct BasicPositionDependentParams {
  std::span<T> theta;  // m items
  std::span<T> gamma;  // END utility at positions 1..m
  std::span<T> beta;
};
using PositionDependentParams = BasicPositionDependentParams<const double>;
using PositionDependentGradient = BasicPositionDependentParams<double>;

struct StratifiedAugmentedParams {
  std::vector<AugmentedNaiveParams> banks;
  std::size_t K() const noexcept { return banks.size(); }
};

struct AugmentedModel {
  AugmentedVariant variant = AugmentedVariant::a;
  std::size_t m = 1;
  AugmentedNaiveParams naive;           // a
  PositionDependentParams positional;   // apd
  StratifiedAugmentedParams stratified; // as
};

struct AugmentedGradient {
  AugmentedNaiveGradient naive;
  PositionDependentGradient positional;
  std::vector<AugmentedNaiveGradient> banks;
};

double a_log_prob(const PartialOrder& q, const AugmentedNaiveParams& params,
                  const AgentCovariates& x = {});
double apd_log_prob(const PartialOrder& q, const PositionDependentParams& params,
                    const AgentCovariates& x = {});
double as_log_prob(const PartialOrder& q, const StratifiedAugmentedParams& params,
                   const AgentCovariates& x = {});
double augmented_log_prob(const PartialOrder& q, const AugmentedModel& model,
                          const AgentCovariates& x = {});

struct AugmentedTerms {
  double log_prob = 0.0;
  // sum over choice events of bank_scale[bank] * log p(event)
  double weighted = 0.0;
};

// Adds d(weighted)/d theta into grad; each choice event at position j is
// weighted by bank_scale[min(j, K) - 1] for A-S and bank_scale[0] otherwise.
AugmentedTerms augmented_log_prob_grad(const PartialOrder& q, const AugmentedModel& model,
                               const AgentCovariates& x,
                               std::span<const double> bank_scale,
                               const AugmentedGradient& grad);

// Algorithm: draw from the remaining alternatives plus END until END is drawn
// or every item is listed. May return the empty order.
PartialOrder sample_augmented(const AugmentedModel& model, const AgentCovariates& x,
                              Rng& rng);

}  // namespace topk
