#pragma once

// Held-out NLL, synthetic replicates drawn from a fitted model, length and
// demand statistics, and CSV emission of the plot data.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topk/core.hpp"
#include "topk/model.hpp"

namespace topk {

struct NllOptions {
  // Augmented models only: evaluate log pi(Q) - log(1 - pi(empty)).
  bool condition_nonempty = false;
};

struct NllResult {
  double nll = 0.0;             // +inf when any record is impossible
  std::size_t impossible = 0;   // records with log-prob -inf
  std::size_t n = 0;
};

NllResult test_nll(const Model& model, const Dataset& data, NllOptions opts = {});

struct ReplicateOptions {
  bool no_empty = false;  // rejection-resample empty augmented draws
  int workers = 1;
};

// Replicate r draws n orders with Rng(derive_seed(seed, r)). Covariate models
// reuse `covariates` (agent i gets row i mod agents), and each replicate
// carries the rows it used.
std::vector<Dataset> replicate_sample(const Model& model, std::size_t n, std::size_t reps,
                                      std::uint64_t seed,
                                      const CovariateTensor* covariates = nullptr,
                                      ReplicateOptions opts = {});

struct LengthMoments {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

LengthMoments length_moments(const Dataset& data);

// Length pmf over 0..m.
std::vector<double> length_pmf(const Dataset& data);

struct LengthStats {
  LengthMoments truth;
  std::vector<LengthMoments> replicates;
  double mean_of_means = 0.0;
  double std_of_means = 0.0;  // sample std across replicates (0 for one)
  double mean_of_stds = 0.0;
  std::vector<double> true_pmf;    // 0..m
  std::vector<double> pooled_pmf;  // 0..m
  double tv = 0.0;
};

// Throws InputError("no replicates") on an empty list.
LengthStats length_stats(const std::vector<Dataset>& replicates, const Dataset& truth);

struct DemandShares {
  std::vector<double> first;    // index id-1
  std::vector<double> overall;  // index id-1; denominator = listed entries
  double empty = 0.0;           // share of empty records
};

DemandShares demand_shares(const Dataset& data);

// (1/2) sum |p_i - q_i|. Throws InputError on a size mismatch or when either
// side does not sum to 1 within 1e-6.
double tv_distance(std::span<const double> p, std::span<const double> q);

struct ModelEval {
  std::string name;
  NllResult nll;
  LengthStats length;
  DemandShares true_demand;
  std::vector<DemandShares> replicate_demand;
};

struct EvalReport {
  std::vector<std::string> alternatives;  // labels, index id-1
  std::vector<ModelEval> models;
};

ModelEval evaluate_model(const std::string& name, const Model& model, const Dataset& test,
                         const std::vector<Dataset>& replicates, NllOptions opts = {});

// item_id,group_label lines (optional header). Returns the label per id-1;
// ids absent from the file keep their own label.
std::vector<std::string> load_groups(const std::filesystem::path& path, const Universe& u);

// Writes nll_by_model.csv, length_stats_by_model.csv and
// demand_by_alternative.csv. With `groups`, demand is summed per group label
// in order of first appearance.
void emit_plot_data(const EvalReport& report, const std::filesystem::path& dir,
                    const std::vector<std::string>* groups = nullptr);

}  // namespace topk
