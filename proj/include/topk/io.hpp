#pragma once

// Ballot files (preflib strict-incomplete orders), covariate tables, model
// checkpoints and dataset summaries.
//
// Preflib, legacy layout:
//   <m>
//   <id>,<name>            (m lines)
//   <voters>,<sum>,<unique>
//   <count>,<alt>,<alt>,...
// Preflib, 2021 layout:
//   # NUMBER ALTERNATIVES: <m>
//   # NUMBER VOTERS: <n>
//   # ALTERNATIVE NAME <id>: <name>
//   <count>: <alt>,<alt>,...
// Each weighted line expands into `count` identical records. Ties ({...}) are
// rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "topk/core.hpp"
#include "topk/estimation.hpp"
#include "topk/model.hpp"

namespace topk {

struct ParseOptions {
  bool allow_empty = false;  // accept "1:" lines (augmented samples)
};

struct ParseReport {
  std::optional<std::size_t> declared_voters;
  std::vector<std::string> warnings;
};

Dataset parse_preflib(std::istream& in, const std::string& source = "<stream>",
                      ParseReport* report = nullptr, ParseOptions opts = {});
Dataset parse_preflib(const std::filesystem::path& path, ParseReport* report = nullptr,
                      ParseOptions opts = {});

// 2021 layout with unit weights, one record per line.
void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

struct CovariateReport {
  std::size_t rows = 0;
  std::size_t missing = 0;  // (agent, item) pairs filled with zeros
};

// CSV with header agent_id,item_id,<feature>...; agent ids are 1-based
// record positions.
CovariateTensor load_covariates(std::istream& in, const Universe& universe,
                                std::size_t agents, CovariateReport* report = nullptr,
                                const std::string& source = "<stream>");
CovariateTensor load_covariates(const std::filesystem::path& path, const Universe& universe,
                                std::size_t agents, CovariateReport* report = nullptr);

struct SummaryStats {
  std::size_t n = 0;
  std::size_t m = 0;
  double mean_length = 0.0;
  std::vector<std::size_t> histogram;  // index = length, 0..m
};

SummaryStats summary_stats(const Dataset& data);
void write_summary(const SummaryStats& stats, std::ostream& out);

struct Provenance {
  std::string data_hash;
  std::uint64_t seed = 0;
  std::string timestamp;
};

struct Checkpoint {
  Model model{ModelKind::ci, 1};
  std::vector<std::string> labels;
  std::optional<FitConfig> config;
  Provenance provenance;
};

inline constexpr int checkpoint_version = 1;

std::string checkpoint_to_string(const Checkpoint& ckpt);
// Throws InputError on malformed JSON, version mismatch or shape errors.
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the canonical dataset text and covariate values, as hex.
std::string dataset_hash(const Dataset& data);

// printf("%.17g")
std::string format_double(double v);

}  // namespace topk
