#include "topk/augmented.hpp"

#include <stdexcept>

#include "topk/ranking.hpp"

namespace topk {

namespace {

struct PositionView {
  std::span<const double> items;
  double end = 0.0;
  std::span<const double> beta;
  std::size_t bank = 0;
};

std::size_t bank_count(const AugmentedModel& model) {
  return model.variant == AugmentedVariant::as ? model.stratified.K() : 1;
}

PositionView at_position(const AugmentedModel& model, std::size_t j) {
  const std::size_t m = model.m;
  switch (model.variant) {
    case AugmentedVariant::a:
      return {model.naive.theta.first(m), model.naive.theta[m], model.naive.beta, 0};
    case AugmentedVariant::apd:
      return {model.positional.theta, model.positional.gamma[j - 1],
              model.positional.beta, 0};
    case AugmentedVariant::as: {
      const std::size_t b = stratum_index(j, model.stratified.K());
      const auto& bank = model.stratified.banks[b];
      return {bank.theta.first(m), bank.theta[m], bank.beta, b};
    }
  }
  throw std::logic_error("unknown augmented variant");
}

// Item utilities per bank, computed on first use.
class UtilityCache {
 public:
  UtilityCache(const AugmentedModel& model, const AgentCovariates& x)
      : model_(model), x_(x), cache_(bank_count(model)) {}

  // Utilities over m items followed by END for choice position j.
  const std::vector<double>& at(std::size_t j) {
    const PositionView v = at_position(model_, j);
    auto& u = cache_[v.bank];
    if (u.empty()) {
      u.resize(model_.m + 1);
      pl_utilities(PLParams{v.items, v.beta}, x_, std::span(u).first(model_.m));
    }
    u[model_.m] = v.end;
    return u;
  }

 private:
  const AugmentedModel& model_;
  const AgentCovariates& x_;
  std::vector<std::vector<double>> cache_;
};

void scatter_gradient(const AugmentedModel& model, const AugmentedGradient& grad,
                      const AgentCovariates& x, std::size_t j, std::span<const double> du) {
  const std::size_t m = model.m;
  std::span<double> items, beta;
  switch (model.variant) {
    case AugmentedVariant::a:
      items = grad.naive.theta.first(m);
      grad.naive.theta[m] += du[m];
      beta = grad.naive.beta;
      break;
    case AugmentedVariant::apd:
      items = grad.positional.theta;
      grad.positional.gamma[j - 1] += du[m];
      beta = grad.positional.beta;
      break;
    case AugmentedVariant::as: {
      const auto& bank = grad.banks[stratum_index(j, model.stratified.K())];
      items = bank.theta.first(m);
      bank.theta[m] += du[m];
      beta = bank.beta;
      break;
    }
  }
  for (std::size_t a = 0; a < m; ++a) items[a] += du[a];
  if (!beta.empty()) {
    for (std::size_t a = 0; a < m; ++a) {
      if (du[a] == 0.0) continue;
      const auto feat = x.item(static_cast<AltId>(a + 1));
      for (std::size_t f = 0; f < feat.size(); ++f) beta[f] += du[a] * feat[f];
    }
  }
}

AugmentedTerms evaluate(const PartialOrder& q, const AugmentedModel& model,
                        const AgentCovariates& x, std::span<const double> bank_scale,
                        const AugmentedGradient* grad) {
  const std::size_t m = model.m;
  const std::size_t k = q.length();
  UtilityCache utilities(model, x);
  std::vector<char> available(m + 1, 1);
  std::vector<double> du(grad ? m + 1 : 0);

  AugmentedTerms out;
  // Positions 1..k choose items; position k+1 chooses END unless k == m.
  const std::size_t last = k < m ? k + 1 : k;
  for (std::size_t j = 1; j <= last; ++j) {
    const std::size_t chosen = j <= k ? q[j - 1] - 1 : m;
    const auto& u = utilities.at(j);
    if (grad) {
      std::fill(du.begin(), du.end(), 0.0);
      const PositionView v = at_position(model, j);
      const double scale = bank_scale[bank_scale.size() == 1 ? 0 : v.bank];
      const double lp = choice_log_prob(u, available, chosen, du, scale);
      out.log_prob += lp;
      out.weighted += scale * lp;
      scatter_gradient(model, *grad, x, j, du);
    } else {
      out.log_prob += choice_log_prob(u, available, chosen);
    }
    if (j <= k) available[chosen] = 0;
  }
  return out;
}

AugmentedModel wrap(const AugmentedNaiveParams& p) {
  AugmentedModel model;
  model.variant = AugmentedVariant::a;
  model.m = p.theta.size() - 1;
  model.naive = p;
  return model;
}

}  // namespace

double a_log_prob(const PartialOrder& q, const AugmentedNaiveParams& params,
                  const AgentCovariates& x) {
  return augmented_log_prob(q, wrap(params), x);
}

double apd_log_prob(const PartialOrder& q, const PositionDependentParams& params,
                    const AgentCovariates& x) {
  AugmentedModel model;
  model.variant = AugmentedVariant::apd;
  model.m = params.theta.size();
  model.positional = params;
  return augmented_log_prob(q, model, x);
}

double as_log_prob(const PartialOrder& q, const StratifiedAugmentedParams& params,
                   const AgentCovariates& x) {
  if (params.banks.empty()) throw std::invalid_argument("A-S requires K >= 1 banks");
  AugmentedModel model;
  model.variant = AugmentedVariant::as;
  model.m = params.banks.front().theta.size() - 1;
  model.stratified = params;
  return augmented_log_prob(q, model, x);
}

double augmented_log_prob(const PartialOrder& q, const AugmentedModel& model,
                          const AgentCovariates& x) {
  validate_order(q, Universe(model.m), /*allow_empty=*/true);
  return evaluate(q, model, x, {}, nullptr).log_prob;
}

AugmentedTerms augmented_log_prob_grad(const PartialOrder& q, const AugmentedModel& model,
                               const AgentCovariates& x,
                               std::span<const double> bank_scale,
                               const AugmentedGradient& grad) {
  return evaluate(q, model, x, bank_scale, &grad);
}

PartialOrder sample_augmented(const AugmentedModel& model, const AgentCovariates& x,
                              Rng& rng) {
  const std::size_t m = model.m;
  UtilityCache utilities(model, x);
  std::vector<char> available(m + 1, 1);
  std::vector<AltId> items;
  for (std::size_t j = 1; j <= m; ++j) {
    const std::size_t a = sample_choice(utilities.at(j), available, rng);
    if (a == m) break;
    available[a] = 0;
    items.push_back(static_cast<AltId>(a + 1));
  }
  return PartialOrder(std::move(items));
}

}  // namespace topk
