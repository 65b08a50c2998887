#pragma once

// Student-proposing deferred acceptance over submitted (possibly truncated)
// lists, with per-program capacities and strict priority orders.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "topk/core.hpp"

namespace topk {

struct Market {
  std::vector<PartialOrder> preferences;          // students over programs 1..m
  std::vector<std::size_t> capacities;            // index program-1
  std::vector<std::vector<std::size_t>> priorities;  // per program, students best first
};

inline constexpr AltId unassigned = 0;

struct Matching {
  std::vector<AltId> assignment;  // per student; `unassigned` = 0
};

// One uniform random priority permutation per program, program p drawn from
// Rng(derive_seed(seed, p)).
Market make_market(std::vector<PartialOrder> preferences, std::vector<std::size_t> capacities,
                   std::uint64_t seed);

// Throws InputError when capacities/priorities do not match the preferences.
void validate_market(const Market& market);

Matching deferred_acceptance(const Market& market);

struct OutcomeRates {
  double top1 = 0.0;
  double top3 = 0.0;
  double any = 0.0;
};

OutcomeRates outcome_stats(const Matching& matching,
                           const std::vector<PartialOrder>& preferences);

// Each preference set is matched against make_market(set, capacities, seed),
// so equal-sized sets share the same priorities. Markets run in parallel.
std::vector<OutcomeRates> assign_many(const std::vector<std::vector<PartialOrder>>& sets,
                                      const std::vector<std::size_t>& capacities,
                                      std::uint64_t seed, int workers = 1);

// "program_id,capacity" lines with an optional header; every program 1..m
// must appear exactly once.
std::vector<std::size_t> load_capacities(const std::filesystem::path& path, std::size_t m);

}  // namespace topk
