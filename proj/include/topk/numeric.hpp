#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace topk {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Numerically stable log(sum(exp(v))). Returns -inf for an empty span.
double logsumexp(std::span<const double> v);

// Single multinomial-logit choice from the alternatives flagged in `available`.
// Returns log p(chosen). When `grad` is non-empty, adds
// scale * (1[a == chosen] - p_a) to grad[a] for every available a.
// `chosen` must be available.
double choice_log_prob(std::span<const double> utilities,
                       std::span<const char> available, std::size_t chosen,
                       std::span<double> grad = {}, double scale = 1.0);

// Probabilities of a choice over the available set, written to `probs`
// (zero for unavailable entries).
void choice_probabilities(std::span<const double> utilities,
                          std::span<const char> available, std::span<double> probs);

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
// Seed for stream `stream` derived from a base seed, e.g. (seed, replicate).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Uniform double in [0, 1) from the top 53 bits; identical across platforms.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw of an index from unnormalized non-negative weights.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

// Draw from a choice over the available set (softmax of utilities).
std::size_t sample_choice(std::span<const double> utilities,
                          std::span<const char> available, Rng& rng);

}  // namespace topk
