#include "topk/numeric.hpp"

#include <algorithm>
#include <cassert>

namespace topk {

double logsumexp(std::span<const double> v) {
  if (v.empty()) return neg_inf;
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

namespace {

double available_max(std::span<const double> u, std::span<const char> available) {
  double hi = neg_inf;
  for (std::size_t a = 0; a < u.size(); ++a) {
    if (available[a] && u[a] > hi) hi = u[a];
  }
  return hi;
}

}  // namespace

double choice_log_prob(std::span<const double> u, std::span<const char> available,
                       std::size_t chosen, std::span<double> grad, double scale) {
  assert(available[chosen]);
  const double hi = available_max(u, available);
  double s = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a) {
    if (available[a]) s += std::exp(u[a] - hi);
  }
  const double log_norm = hi + std::log(s);
  if (!grad.empty()) {
    for (std::size_t a = 0; a < u.size(); ++a) {
      if (available[a]) grad[a] -= scale * std::exp(u[a] - log_norm);
    }
    grad[chosen] += scale;
  }
  return u[chosen] - log_norm;
}

void choice_probabilities(std::span<const double> u, std::span<const char> available,
                          std::span<double> probs) {
  const double hi = available_max(u, available);
  double s = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a) {
    probs[a] = available[a] ? std::exp(u[a] - hi) : 0.0;
    s += probs[a];
  }
  for (double& p : probs) p /= s;
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  return last_positive;
}

std::size_t sample_choice(std::span<const double> u, std::span<const char> available,
                          Rng& rng) {
  std::vector<double> p(u.size());
  choice_probabilities(u, available, p);
  return sample_index(p, rng);
}

}  // namespace topk
