#include "topk/composite.hpp"

#include <stdexcept>

namespace topk {

namespace {

void require(const CompositeModel& model, CompositeVariant v, const char* name) {
  if (model.variant != v) throw std::invalid_argument(std::string(name) + ": wrong variant");
}

void check_order(const PartialOrder& q, const CompositeModel& model) {
  validate_order(q, Universe(model.m));
}

double length_term(const PartialOrder& q, const CompositeModel& model,
                   const AgentCovariates& x, double scale, std::span<double> grad) {
  if (model.variant == CompositeVariant::cci) {
    if (x.empty()) throw InputError("C-CI requires covariates");
    const auto feat = length_features(x, model.m);
    if (grad.empty()) return poisson_clipped_log_prob(q.length(), feat, model.poisson);
    return poisson_clipped_log_prob_grad(q.length(), feat, model.poisson, scale, grad);
  }
  if (grad.empty()) return categorical_log_prob(q.length(), model.categorical);
  return categorical_log_prob_grad(q.length(), model.categorical, scale, grad);
}

}  // namespace

std::vector<double> length_features(const AgentCovariates& x, std::size_t m) {
  std::vector<double> feat(x.d + 1, 0.0);
  feat[0] = 1.0;
  for (AltId j = 1; j <= m; ++j) {
    const auto row = x.item(j);
    for (std::size_t f = 0; f < x.d; ++f) feat[f + 1] += row[f];
  }
  for (std::size_t f = 1; f < feat.size(); ++f) feat[f] /= static_cast<double>(m);
  return feat;
}

double ci_log_prob(const PartialOrder& q, const CompositeModel& model) {
  require(model, CompositeVariant::ci, "ci_log_prob");
  return composite_log_prob(q, model, {});
}

double cci_log_prob(const PartialOrder& q, const CompositeModel& model,
                    const AgentCovariates& x) {
  require(model, CompositeVariant::cci, "cci_log_prob");
  return composite_log_prob(q, model, x);
}

double cld_log_prob(const PartialOrder& q, const CompositeModel& model,
                    const AgentCovariates& x) {
  require(model, CompositeVariant::cld, "cld_log_prob");
  return composite_log_prob(q, model, x);
}

double composite_log_prob(const PartialOrder& q, const CompositeModel& model,
                          const AgentCovariates& x) {
  check_order(q, model);
  const double len = length_term(q, model, x, 0.0, {});
  if (len == neg_inf) return neg_inf;
  return len + stratified_log_prob(q, model.ranking, x);
}

CompositeTerms composite_log_prob_grad(const PartialOrder& q, const CompositeModel& model,
                                       const AgentCovariates& x, double length_scale,
                                       double ranking_scale,
                                       const CompositeGradient& grad) {
  CompositeTerms t;
  t.length = length_term(q, model, x, length_scale, grad.length);
  const std::size_t b = stratum_index(q.length(), model.ranking.K());
  t.ranking = pl_log_marginal_grad(q, model.ranking.banks[b], x, ranking_scale,
                                   grad.banks[b]);
  return t;
}

PartialOrder sample_composite(const CompositeModel& model, const AgentCovariates& x,
                              Rng& rng) {
  std::size_t len;
  if (model.variant == CompositeVariant::cci) {
    if (x.empty()) throw InputError("C-CI requires covariates");
    len = sample_length(model.poisson, length_features(x, model.m), rng);
  } else {
    len = sample_length(model.categorical, rng);
  }
  return sample_pl_prefix(model.ranking.bank_for_length(len), x, len, rng);
}

}  // namespace topk
