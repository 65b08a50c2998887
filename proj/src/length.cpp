#include "topk/length.hpp"

#include <cmath>
#include <string>

#include "topk/core.hpp"

namespace topk {

namespace {

void check_length(std::size_t k, std::size_t m) {
  if (k < 1 || k > m) {
    throw InputError("length " + std::to_string(k) + " outside [1, " + std::to_string(m) +
                     "]");
  }
}

double log_poisson(std::size_t j, double lambda) {
  return static_cast<double>(j) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(j) + 1.0);
}

// log P(X >= m) for X ~ Poisson(lambda), m >= 1.
double log_poisson_tail(std::size_t m, double lambda) {
  if (lambda < static_cast<double>(m) + 1.0) {
    // Terms decrease from j = m onward; sum ratios relative to pmf(m).
    double sum = 1.0, term = 1.0;
    for (std::size_t i = 1; i < 100000; ++i) {
      term *= lambda / static_cast<double>(m + i);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return log_poisson(m, lambda) + std::log(sum);
  }
  double cdf = 0.0;
  for (std::size_t j = 0; j < m; ++j) cdf += std::exp(log_poisson(j, lambda));
  return std::log1p(-cdf);
}

// d log P_clipped(k) / d lambda, multiplied by lambda.
double dlog_dlog_rate(std::size_t k, std::size_t m, double lambda) {
  if (m == 1) return 0.0;
  if (k == 1) return -lambda * lambda / (1.0 + lambda);
  if (k < m) return static_cast<double>(k) - lambda;
  return lambda * std::exp(log_poisson(m - 1, lambda) - log_poisson_tail(m, lambda));
}

double clipped_log_prob(std::size_t k, std::size_t m, double lambda) {
  if (m == 1) return 0.0;
  if (lambda == 0.0) return k == 1 ? 0.0 : neg_inf;
  if (k == 1) return -lambda + std::log1p(lambda);
  if (k < m) return log_poisson(k, lambda);
  return log_poisson_tail(m, lambda);
}

}  // namespace

double categorical_log_prob(std::size_t k, const CategoricalLengthParams& params) {
  check_length(k, params.m());
  return params.logits[k - 1] - logsumexp(params.logits);
}

double categorical_log_prob_grad(std::size_t k, const CategoricalLengthParams& params,
                                 double scale, std::span<double> grad) {
  check_length(k, params.m());
  const double lse = logsumexp(params.logits);
  for (std::size_t i = 0; i < params.m(); ++i) {
    grad[i] -= scale * std::exp(params.logits[i] - lse);
  }
  grad[k - 1] += scale;
  return params.logits[k - 1] - lse;
}

std::vector<double> categorical_pmf(const CategoricalLengthParams& params) {
  const double lse = logsumexp(params.logits);
  std::vector<double> p(params.m());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(params.logits[i] - lse);
  return p;
}

double poisson_rate(const PoissonLengthParams& params, std::span<const double> x) {
  if (x.size() != params.weights.size()) {
    throw InputError("length covariates of size " + std::to_string(x.size()) +
                     " do not match rate weights of size " +
                     std::to_string(params.weights.size()));
  }
  double eta = 0.0;
  for (std::size_t f = 0; f < x.size(); ++f) eta += params.weights[f] * x[f];
  const double lambda = std::exp(eta);
  if (!std::isfinite(lambda) || !std::isfinite(eta)) {
    throw NumericError("Poisson length rate is not finite");
  }
  return lambda;
}

double poisson_clipped_log_prob(std::size_t k, std::span<const double> x,
                                const PoissonLengthParams& params) {
  check_length(k, params.m);
  return clipped_log_prob(k, params.m, poisson_rate(params, x));
}

double poisson_clipped_log_prob_grad(std::size_t k, std::span<const double> x,
                                     const PoissonLengthParams& params, double scale,
                                     std::span<double> grad) {
  check_length(k, params.m);
  const double lambda = poisson_rate(params, x);
  const double g = scale * dlog_dlog_rate(k, params.m, lambda);
  for (std::size_t f = 0; f < x.size(); ++f) grad[f] += g * x[f];
  return clipped_log_prob(k, params.m, lambda);
}

std::vector<double> poisson_clipped_pmf(double lambda, std::size_t m) {
  std::vector<double> p(m);
  for (std::size_t k = 1; k <= m; ++k) p[k - 1] = std::exp(clipped_log_prob(k, m, lambda));
  return p;
}

std::vector<double> poisson_clipped_pmf(const PoissonLengthParams& params,
                                        std::span<const double> x) {
  return poisson_clipped_pmf(poisson_rate(params, x), params.m);
}

std::size_t sample_length(const CategoricalLengthParams& params, Rng& rng) {
  return sample_index(categorical_pmf(params), rng) + 1;
}

std::size_t sample_length(const PoissonLengthParams& params, std::span<const double> x,
                          Rng& rng) {
  return sample_index(poisson_clipped_pmf(params, x), rng) + 1;
}

}  // namespace topk
