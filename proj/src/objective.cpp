#include "topk/objective.hpp"

#include <omp.h>

#include <exception>
#include <map>
#include <numeric>

namespace topk {

namespace {

std::size_t event_count(std::size_t k, std::size_t m) { return k < m ? k + 1 : k; }

}  // namespace

ObjectivePlan make_plan(const Layout& layout, const Dataset& data,
                        std::span<const std::size_t> subset, bool compress) {
  ObjectivePlan plan;
  plan.data = &data;
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    subset = all;
  }
  if (compress && layout.d == 0) {
    std::map<PartialOrder, std::size_t> slot;
    for (std::size_t i : subset) {
      auto [it, inserted] = slot.try_emplace(data.orders[i], plan.records.size());
      if (inserted) {
        plan.records.push_back({i, 1.0});
      } else {
        plan.records[it->second].weight += 1.0;
      }
    }
  } else {
    plan.records.reserve(subset.size());
    for (std::size_t i : subset) plan.records.push_back({i, 1.0});
  }

  const std::size_t B = layout.bank_count;
  const std::size_t m = layout.m;
  std::vector<double> bank_mass(B, 0.0);
  double total = 0.0;
  for (const auto& r : plan.records) {
    const std::size_t k = data.orders[r.index].length();
    total += r.weight;
    if (layout.kind == ModelKind::cld) {
      bank_mass[stratum_index(k, B)] += r.weight;
    } else if (layout.kind == ModelKind::as) {
      for (std::size_t j = 1; j <= event_count(k, m); ++j) {
        bank_mass[stratum_index(j, B)] += r.weight;
      }
    }
  }
  const auto inv = [](double x) { return x > 0.0 ? 1.0 / x : 0.0; };
  plan.length_coef = inv(total);
  plan.bank_coef.assign(B, inv(total));
  if (is_stratified(layout.kind)) {
    for (std::size_t b = 0; b < B; ++b) plan.bank_coef[b] = inv(bank_mass[b]);
  }
  return plan;
}

double l2_penalty(std::span<const double> params, double lambda, std::span<double> grad) {
  double s = 0.0;
  for (double v : params) s += v * v;
  if (!grad.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) grad[i] += 2.0 * lambda * params[i];
  }
  return lambda * s;
}

double laplacian_penalty(std::span<const std::span<const double>> banks, double lambda,
                         std::span<const std::span<double>> grad) {
  double s = 0.0;
  for (std::size_t i = 1; i < banks.size(); ++i) {
    if (banks[i].size() != banks[i - 1].size()) {
      throw std::invalid_argument("laplacian penalty: bank shape mismatch");
    }
    for (std::size_t j = 0; j < banks[i].size(); ++j) {
      const double diff = banks[i][j] - banks[i - 1][j];
      s += diff * diff;
      if (!grad.empty()) {
        grad[i][j] += 2.0 * lambda * diff;
        grad[i - 1][j] -= 2.0 * lambda * diff;
      }
    }
  }
  return lambda * s;
}

namespace {

// Per-thread accumulator holding typed gradient views into its own buffer.
struct Accumulator {
  Accumulator(const Layout& layout, std::span<double> buffer) : grad(buffer) {
    if (is_composite(layout.kind)) {
      composite = composite_gradient_view(layout, buffer);
    } else {
      augmented = augmented_gradient_view(layout, buffer);
    }
  }
  std::span<double> grad;
  CompositeGradient composite;
  AugmentedGradient augmented;
  double loss = 0.0;
};

[[noreturn]] void impossible_record(std::size_t index) {
  throw NumericError("training record " + std::to_string(index + 1) +
                     " has zero probability under the model (non-finite loss)");
}

void accumulate_range(const Model& model, const ObjectivePlan& plan, std::size_t begin,
                      std::size_t end, Accumulator& acc) {
  const Layout& layout = model.layout();
  const Dataset& data = *plan.data;
  if (is_composite(layout.kind)) {
    const CompositeModel view = model.composite();
    for (std::size_t r = begin; r < end; ++r) {
      const auto& rec = plan.records[r];
      const auto& q = data.orders[rec.index];
      const AgentCovariates x = layout.d > 0 ? data.agent(rec.index) : AgentCovariates{};
      const double len_scale = -rec.weight * plan.length_coef;
      const double rank_scale =
          -rec.weight * plan.bank_coef[stratum_index(q.length(), layout.bank_count)];
      const CompositeTerms t =
          composite_log_prob_grad(q, view, x, len_scale, rank_scale, acc.composite);
      if (!std::isfinite(t.total())) impossible_record(rec.index);
      acc.loss += len_scale * t.length + rank_scale * t.ranking;
    }
  } else {
    const AugmentedModel view = model.augmented();
    std::vector<double> scale(plan.bank_coef.size());
    for (std::size_t r = begin; r < end; ++r) {
      const auto& rec = plan.records[r];
      const AgentCovariates x = layout.d > 0 ? data.agent(rec.index) : AgentCovariates{};
      for (std::size_t b = 0; b < scale.size(); ++b) scale[b] = -rec.weight * plan.bank_coef[b];
      const AugmentedTerms t =
          augmented_log_prob_grad(data.orders[rec.index], view, x, scale, acc.augmented);
      if (!std::isfinite(t.log_prob)) impossible_record(rec.index);
      acc.loss += t.weighted;
    }
  }
}

ObjectiveParts finish(const Model& model, const Penalties& pen, double loss,
                      std::span<double> grad) {
  const Layout& layout = model.layout();
  const auto params = model.params();
  ObjectiveParts parts;
  parts.loss = loss;
  if (!pen.l2_as_weight_decay) parts.l2 = l2_penalty(params, pen.lambda_l2, grad);
  if (layout.bank_count > 1) {
    std::vector<std::span<const double>> banks;
    std::vector<std::span<double>> gbanks;
    for (std::size_t b = 0; b < layout.bank_count; ++b) {
      banks.push_back(bank_span(layout, params, b));
      gbanks.push_back(grad.subspan(layout.bank_offset(b), layout.bank_stride()));
    }
    parts.laplacian = laplacian_penalty(banks, pen.lambda_laplacian, gbanks);
  }
  return parts;
}

}  // namespace

ObjectiveParts objective_serial(const Model& model, const ObjectivePlan& plan,
                                const Penalties& pen, std::span<double> grad) {
  std::vector<double> scratch;
  if (grad.empty()) {
    scratch.assign(model.params().size(), 0.0);
    grad = scratch;
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  Accumulator acc(model.layout(), grad);
  accumulate_range(model, plan, 0, plan.records.size(), acc);
  return finish(model, pen, acc.loss, grad);
}

ObjectiveParts objective_parallel(const Model& model, const ObjectivePlan& plan,
                                  const Penalties& pen, std::span<double> grad,
                                  int workers) {
  std::vector<double> scratch;
  if (grad.empty()) {
    scratch.assign(model.params().size(), 0.0);
    grad = scratch;
  }
  const std::size_t n = plan.records.size();
  const std::size_t P = model.params().size();
  const int blocks = std::max(1, workers);
  std::vector<std::vector<double>> buffers(blocks, std::vector<double>(P, 0.0));
  std::vector<double> losses(blocks, 0.0);
  std::vector<std::exception_ptr> errors(blocks);

#pragma omp parallel for num_threads(blocks) schedule(static, 1)
  for (int b = 0; b < blocks; ++b) {
    try {
      const std::size_t begin = n * b / blocks;
      const std::size_t end = n * (b + 1) / blocks;
      Accumulator acc(model.layout(), buffers[b]);
      accumulate_range(model, plan, begin, end, acc);
      losses[b] = acc.loss;
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (int b = 0; b < blocks; ++b) {
    loss += losses[b];
    for (std::size_t i = 0; i < P; ++i) grad[i] += buffers[b][i];
  }
  return finish(model, pen, loss, grad);
}

}  // namespace topk
