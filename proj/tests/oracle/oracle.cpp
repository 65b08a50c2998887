#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oracle {

using topk::ModelKind;

std::vector<std::vector<AltId>> permutations(std::vector<AltId> items) {
  std::sort(items.begin(), items.end());
  std::vector<std::vector<AltId>> out;
  do {
    out.push_back(items);
  } while (std::next_permutation(items.begin(), items.end()));
  return out;
}

std::vector<PartialOrder> outcome_space(std::size_t m, bool include_empty) {
  std::vector<PartialOrder> out;
  if (include_empty) out.emplace_back();
  std::vector<AltId> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = static_cast<AltId>(i + 1);
  for (std::size_t k = 1; k <= m; ++k) {
    std::vector<std::vector<AltId>> seen;
    for (const auto& p : permutations(all)) {
      std::vector<AltId> head(p.begin(), p.begin() + static_cast<long>(k));
      if (std::find(seen.begin(), seen.end(), head) == seen.end()) seen.push_back(head);
    }
    for (auto& h : seen) out.emplace_back(std::move(h));
  }
  return out;
}

double categorical_prob(std::size_t k, const std::vector<double>& logits) {
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  return std::exp(logits[k - 1]) / z;
}

double poisson_clipped_prob(std::size_t k, double lambda, std::size_t m) {
  if (m == 1) return 1.0;
  auto pmf = [lambda](std::size_t j) {
    long double v = std::exp(-static_cast<long double>(lambda));
    for (std::size_t i = 1; i <= j; ++i) v *= static_cast<long double>(lambda) / i;
    return v;
  };
  if (k == 1) return static_cast<double>(pmf(0) + pmf(1));
  if (k < m) return static_cast<double>(pmf(k));
  long double head = 0.0L;
  for (std::size_t j = 0; j < m; ++j) head += pmf(j);
  return static_cast<double>(1.0L - head);
}

namespace {

std::vector<double> role(const topk::Model& model, const std::string& name, int bank) {
  for (const auto& b : topk::param_blocks(model.layout())) {
    if (b.role == name && (b.bank == bank || b.bank < 0)) {
      const auto v = model.params().subspan(b.offset, b.size);
      return {v.begin(), v.end()};
    }
  }
  return {};
}

double item_utility(const std::vector<double>& delta, const std::vector<double>& beta,
                    const topk::AgentCovariates& x, AltId a) {
  double u = delta[a - 1];
  for (std::size_t f = 0; f < beta.size(); ++f) u += beta[f] * x.values[(a - 1) * x.d + f];
  return u;
}

}  // namespace

double model_prob(const topk::Model& model, const PartialOrder& q,
                  const topk::AgentCovariates& x) {
  const std::size_t m = model.m();
  const std::size_t k = q.length();
  const std::size_t K = model.K();
  switch (model.kind()) {
    case ModelKind::ci:
    case ModelKind::cld: {
      if (k == 0) return 0.0;
      const int bank = model.kind() == ModelKind::cld
                           ? static_cast<int>(std::min(k, K) - 1)
                           : 0;
      const auto delta = role(model, "delta", bank);
      const auto beta = role(model, "beta", bank);
      const double len = categorical_prob(k, role(model, "length_logits", -1));
      return len * extension_mass(q, m, false, [&](std::size_t, AltId a) {
               return item_utility(delta, beta, x, a);
             });
    }
    case ModelKind::cci: {
      if (k == 0) return 0.0;
      const auto w = role(model, "rate_weights", -1);
      double eta = w[0];
      for (std::size_t f = 0; f + 1 < w.size(); ++f) {
        double mean = 0.0;
        for (AltId a = 1; a <= m; ++a) mean += x.values[(a - 1) * x.d + f];
        eta += w[f + 1] * mean / static_cast<double>(m);
      }
      const auto delta = role(model, "delta", 0);
      const auto beta = role(model, "beta", 0);
      return poisson_clipped_prob(k, std::exp(eta), m) *
             extension_mass(q, m, false, [&](std::size_t, AltId a) {
               return item_utility(delta, beta, x, a);
             });
    }
    case ModelKind::a:
    case ModelKind::as: {
      std::vector<std::vector<double>> theta, beta;
      for (std::size_t b = 0; b < K; ++b) {
        auto t = role(model, "delta", static_cast<int>(b));
        t.push_back(role(model, "end", static_cast<int>(b))[0]);
        theta.push_back(std::move(t));
        beta.push_back(role(model, "beta", static_cast<int>(b)));
      }
      return extension_mass(q, m, true, [&](std::size_t pos, AltId a) {
        const std::size_t b = std::min(pos, K) - 1;
        if (a == m + 1) return theta[b][m];
        return item_utility(theta[b], beta[b], x, a);
      });
    }
    case ModelKind::apd: {
      const auto theta = role(model, "delta", -1);
      const auto gamma = role(model, "gamma", -1);
      const auto beta = role(model, "beta", -1);
      return extension_mass(q, m, true, [&](std::size_t pos, AltId a) {
        if (a == m + 1) return pos <= m ? gamma[pos - 1] : 0.0;
        return item_utility(theta, beta, x, a);
      });
    }
  }
  return 0.0;
}

std::size_t blocking_pairs(const topk::Market& market, const topk::Matching& matching) {
  const std::size_t n = market.preferences.size();
  const std::size_t m = market.capacities.size();
  auto rank_of = [&](std::size_t p, std::size_t s) {
    const auto& pri = market.priorities[p];
    return static_cast<std::size_t>(std::find(pri.begin(), pri.end(), s) - pri.begin());
  };
  std::size_t count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& q = market.preferences[s];
    for (std::size_t pos = 0; pos < q.length(); ++pos) {
      const AltId p = q[pos];
      if (p == matching.assignment[s]) break;  // only strictly preferred programs
      std::size_t held = 0;
      bool displaces = false;
      for (std::size_t t = 0; t < n; ++t) {
        if (matching.assignment[t] != p) continue;
        ++held;
        displaces = displaces || rank_of(p - 1, s) < rank_of(p - 1, t);
      }
      if ((held < market.capacities[p - 1]) || displaces) ++count;
    }
  }
  (void)m;
  return count;
}

bool feasible(const topk::Market& market, const topk::Matching& matching) {
  const std::size_t m = market.capacities.size();
  std::vector<std::size_t> load(m, 0);
  for (std::size_t s = 0; s < matching.assignment.size(); ++s) {
    const AltId p = matching.assignment[s];
    if (p == topk::unassigned) continue;
    if (p > m) return false;
    const auto& q = market.preferences[s];
    if (std::find(q.begin(), q.end(), p) == q.end()) return false;
    ++load[p - 1];
  }
  for (std::size_t p = 0; p < m; ++p) {
    if (load[p] > market.capacities[p]) return false;
  }
  return true;
}

void randomize(topk::Model& model, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : model.params()) v = u(rng);
}

topk::CovariateTensor random_covariates(std::size_t n, std::size_t m, std::size_t d,
                                        std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> values(n * m * d);
  for (double& v : values) v = u(rng);
  return topk::CovariateTensor(n, m, d, std::move(values));
}

topk::Dataset random_dataset(std::size_t m, std::size_t n, std::size_t d, std::mt19937_64& rng,
                             bool include_empty) {
  const auto space = outcome_space(m, include_empty);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  topk::Dataset data;
  data.universe = topk::Universe(m);
  for (std::size_t i = 0; i < n; ++i) data.orders.push_back(space[pick(rng)]);
  if (d > 0) data.covariates = random_covariates(n, m, d, rng);
  return data;
}

GradCheck check_gradient(topk::Model model, const topk::Dataset& data,
                         const topk::Penalties& pen, double h, double floor) {
  const topk::ObjectivePlan plan = topk::make_plan(model.layout(), data);
  const std::size_t P = model.params().size();
  std::vector<double> grad(P), scratch(P);
  topk::objective_serial(model, plan, pen, grad);
  GradCheck out;
  for (const auto& block : topk::param_blocks(model.layout())) {
    for (std::size_t i = 0; i < block.size; ++i) {
      double& v = model.params()[block.offset + i];
      const double keep = v;
      v = keep + h;
      const double up = topk::objective_serial(model, plan, pen, scratch).total();
      v = keep - h;
      const double dn = topk::objective_serial(model, plan, pen, scratch).total();
      v = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double a = grad[block.offset + i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      ++out.checked;
      if (rel >= out.max_rel) {
        out.max_rel = rel;
        out.worst = block.role + "[" + std::to_string(block.bank) + "]#" + std::to_string(i);
      }
    }
  }
  return out;
}

}  // namespace oracle
