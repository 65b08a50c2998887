#pragma once

// Composite models: a length distribution combined with a Plackett-Luce
// ranking truncated to that length.
//
//   C-I   categorical length, one PL bank
//   C-CI  clipped-Poisson length with rate exp(w . [1, mean_j x_ij]), one PL
//         bank with covariate-linear utilities
//   C-LD  categorical length, K PL banks selected by min(k, K)

#include <vector>

#include "topk/length.hpp"
#include "topk/ranking.hpp"

namespace topk {

enum class CompositeVariant { ci, cci, cld };

struct CompositeModel {
  CompositeVariant variant = CompositeVariant::ci;
  std::size_t m = 1;
  CategoricalLengthParams categorical;  // ci, cld
  PoissonLengthParams poisson;          // cci
  StratifiedPLParams ranking;           // exactly one bank for ci, cci
};

struct CompositeGradient {
  std::span<double> length;  // logits or rate weights
  std::vector<PLGradient> banks;
};

// Per-agent feature vector of the Poisson rate: an intercept followed by the
// item-averaged covariates.
std::vector<double> length_features(const AgentCovariates& x, std::size_t m);

double ci_log_prob(const PartialOrder& q, const CompositeModel& model);
double cci_log_prob(const PartialOrder& q, const CompositeModel& model,
                    const AgentCovariates& x);
double cld_log_prob(const PartialOrder& q, const CompositeModel& model,
                    const AgentCovariates& x = {});
double composite_log_prob(const PartialOrder& q, const CompositeModel& model,
                          const AgentCovariates& x = {});

struct CompositeTerms {
  double length = 0.0;
  double ranking = 0.0;
  double total() const { return length + ranking; }
};

// Log-probability split into its length and ranking factors. Adds
// length_scale * d(length term) and ranking_scale * d(ranking term) into grad.
CompositeTerms composite_log_prob_grad(const PartialOrder& q, const CompositeModel& model,
                                       const AgentCovariates& x, double length_scale,
                                       double ranking_scale, const CompositeGradient& grad);

// Draw a length, then that many sequential PL choices (bank chosen by the
// drawn length for C-LD).
PartialOrder sample_composite(const CompositeModel& model, const AgentCovariates& x,
                              Rng& rng);

}  // namespace topk
