#pragma once

// Training objective F = loss + l2 + laplacian and its gradient.
//
// The loss is a sum of per-stratum mean negative log-likelihoods:
//   - non-stratified models: mean over records of -log pi(Q);
//   - C-LD: mean length NLL over all records plus, for each length stratum,
//     the mean ranking NLL over the records in that stratum;
//   - A-S: for each position stratum, the mean NLL over choice events
//     (including terminal END choices) falling in that stratum.
// Empty strata contribute nothing.

#include <span>
#include <vector>

#include "topk/core.hpp"
#include "topk/model.hpp"

namespace topk {

struct WeightedRecord {
  std::size_t index = 0;  // record (and agent) index into the dataset
  double weight = 1.0;
};

struct ObjectivePlan {
  const Dataset* data = nullptr;
  std::vector<WeightedRecord> records;
  double length_coef = 0.0;
  std::vector<double> bank_coef;
};

// Records in `subset` (all records when empty). When the model has no
// covariates identical orders are merged into one weighted record, keeping
// the index of the first occurrence.
ObjectivePlan make_plan(const Layout& layout, const Dataset& data,
                        std::span<const std::size_t> subset = {}, bool compress = true);

struct Penalties {
  double lambda_l2 = 0.0;
  double lambda_laplacian = 0.0;
  // When set, l2 is left out of the objective and applied by the optimizer.
  bool l2_as_weight_decay = false;
};

struct ObjectiveParts {
  double loss = 0.0;
  double l2 = 0.0;
  double laplacian = 0.0;
  double total() const { return loss + l2 + laplacian; }
};

// Penalty values; gradients are added into grad when non-empty.
double l2_penalty(std::span<const double> params, double lambda,
                  std::span<double> grad = {});
double laplacian_penalty(std::span<const std::span<const double>> banks, double lambda,
                         std::span<const std::span<double>> grad = {});

// Serial reference: one pass over the records in order. An empty grad
// computes the value only.
ObjectiveParts objective_serial(const Model& model, const ObjectivePlan& plan,
                                const Penalties& pen, std::span<double> grad);

// Records split into `workers` contiguous blocks, each accumulated on its own
// thread, then reduced in block order. Bit-reproducible for a fixed worker
// count; identical to objective_serial when workers == 1.
ObjectiveParts objective_parallel(const Model& model, const ObjectivePlan& plan,
                                  const Penalties& pen, std::span<double> grad,
                                  int workers);

}  // namespace topk
