#pragma once

// Distributions over list length k in [1, m].

#include <span>
#include <vector>

#include "topk/numeric.hpp"

namespace topk {

// p_k = softmax(logits)_k for k = 1..m.
struct CategoricalLengthParams {
  std::span<const double> logits;
  std::size_t m() const noexcept { return logits.size(); }
};

// Poisson with rate exp(weights . x), with all mass below 1 absorbed at k = 1
// and all mass at or above m absorbed at k = m.
struct PoissonLengthParams {
  std::span<const double> weights;
  std::size_t m = 1;
};

double categorical_log_prob(std::size_t k, const CategoricalLengthParams& params);
// Adds scale * d log p_k / d logits into grad.
double categorical_log_prob_grad(std::size_t k, const CategoricalLengthParams& params,
                                 double scale, std::span<double> grad);
std::vector<double> categorical_pmf(const CategoricalLengthParams& params);

// exp(weights . x); throws NumericError when not finite.
double poisson_rate(const PoissonLengthParams& params, std::span<const double> x);
double poisson_clipped_log_prob(std::size_t k, std::span<const double> x,
                                const PoissonLengthParams& params);
double poisson_clipped_log_prob_grad(std::size_t k, std::span<const double> x,
                                     const PoissonLengthParams& params, double scale,
                                     std::span<double> grad);
// Clipped pmf over k = 1..m (index k-1) for rate lambda.
std::vector<double> poisson_clipped_pmf(double lambda, std::size_t m);
std::vector<double> poisson_clipped_pmf(const PoissonLengthParams& params,
                                        std::span<const double> x);

std::size_t sample_length(const CategoricalLengthParams& params, Rng& rng);
std::size_t sample_length(const PoissonLengthParams& params, std::span<const double> x,
                          Rng& rng);

}  // namespace topk
