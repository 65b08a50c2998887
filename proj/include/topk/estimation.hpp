#pragma once

// Regularized maximum-likelihood fitting with Adam, k-fold splits and
// hyperparameter grid search.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "topk/core.hpp"
#include "topk/model.hpp"
#include "topk/objective.hpp"

namespace topk {

struct FitConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lambda_l2 = 1e-5;
  double lambda_laplacian = 0.0;
  std::size_t K = 1;
  std::size_t max_epochs = 2000;
  double tol = 1e-4;              // on |F_t - F_{t-1}|
  std::size_t batch_size = 0;     // 0 = full batch
  std::uint64_t seed = 0;
  int workers = 1;
  bool l2_as_weight_decay = false;

  // Throws InputError for non-positive rates or tolerances, K == 0, etc.
  void validate() const;
  Penalties penalties() const {
    return {lambda_l2, lambda_laplacian, l2_as_weight_decay};
  }
};

struct TraceRow {
  std::size_t epoch = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct FitResult {
  Model model;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::size_t epochs_run = 0;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::vector<TraceRow> trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

// Adam with bias correction, one state slot per parameter.
class Adam {
 public:
  Adam(std::size_t size, double lr, double beta1, double beta2, double epsilon,
       double weight_decay = 0.0);
  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

// -(1/|D|) sum log pi(Q). Throws NumericError naming the first record with
// zero probability.
double nll(const Dataset& data, const Model& model);

// Parameters start at zero. Each epoch evaluates the objective at the current
// parameters, stops when it changed by less than tol, and otherwise takes one
// Adam step per batch. Deterministic given the config.
FitResult fit(ModelKind kind, const Dataset& data, const FitConfig& cfg);

// CSV "epoch,objective,grad_norm" with 17 significant digits.
void write_trace(const std::vector<TraceRow>& trace, std::ostream& out);

// Length strata: D_i = {Q : |Q| = i} for i < K, D_K = {Q : |Q| >= K}.
// Entries are record indices.
std::vector<std::vector<std::size_t>> stratify_by_length(const Dataset& data,
                                                         std::size_t K);

struct ChoiceEvent {
  std::size_t record = 0;
  std::size_t position = 0;    // 1-based
  AltId chosen = 0;            // 0 = END
  std::vector<AltId> available;  // items still available; END always is
};

// Position strata: choice events at position i for i < K, positions >= K in
// the last stratum. Terminal END choices are included for orders with k < m.
std::vector<std::vector<ChoiceEvent>> stratify_by_rank(const Dataset& data, std::size_t K);

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

struct Fold {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> test_indices;
};

// Seeded shuffle, then contiguous folds whose sizes differ by at most one.
std::vector<Fold> kfold_split(const Dataset& data, std::size_t folds, std::uint64_t seed);

struct GridPoint {
  std::size_t K = 1;
  double lambda_laplacian = 0.0;
};

struct GridRow {
  GridPoint point;
  std::vector<double> fold_nll;
  double mean_nll = 0.0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridRow> table;
};

// Mean held-out NLL over k folds for each grid point; the first minimum wins.
GridResult grid_search(ModelKind kind, const Dataset& data,
                       std::span<const GridPoint> grid, const FitConfig& cfg,
                       std::size_t folds = 5);

}  // namespace topk
