#include "topk/assignment.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>

#include "topk/numeric.hpp"

namespace topk {

Market make_market(std::vector<PartialOrder> preferences, std::vector<std::size_t> capacities,
                   std::uint64_t seed) {
  Market market{std::move(preferences), std::move(capacities), {}};
  const std::size_t n = market.preferences.size();
  for (std::size_t p = 0; p < market.capacities.size(); ++p) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, p + 1));
    std::shuffle(order.begin(), order.end(), rng);
    market.priorities.push_back(std::move(order));
  }
  return market;
}

void validate_market(const Market& market) {
  const std::size_t m = market.capacities.size();
  const std::size_t n = market.preferences.size();
  if (m == 0) throw InputError("market has no programs");
  if (market.priorities.size() != m) throw InputError("one priority order per program required");
  const Universe u(m);
  for (const auto& q : market.preferences) validate_order(q, u, true);
  for (const auto& pri : market.priorities) {
    if (pri.size() != n) throw InputError("priority order must cover every student");
    std::vector<char> seen(n, 0);
    for (std::size_t s : pri) {
      if (s >= n || seen[s]) throw InputError("priority order is not a permutation");
      seen[s] = 1;
    }
  }
}

Matching deferred_acceptance(const Market& market) {
  validate_market(market);
  const std::size_t n = market.preferences.size();
  const std::size_t m = market.capacities.size();
  std::vector<std::vector<std::size_t>> rank(m, std::vector<std::size_t>(n));
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t r = 0; r < n; ++r) rank[p][market.priorities[p][r]] = r;
  }
  std::vector<std::size_t> next(n, 0);
  // Held students per program, kept sorted by priority rank (best first).
  std::vector<std::vector<std::size_t>> held(m);
  std::vector<std::size_t> free(n);
  std::iota(free.rbegin(), free.rend(), std::size_t{0});
  while (!free.empty()) {
    const std::size_t s = free.back();
    free.pop_back();
    const auto& prefs = market.preferences[s];
    if (next[s] >= prefs.length()) continue;
    const std::size_t p = prefs[next[s]++] - 1;
    auto& h = held[p];
    const auto pos = std::lower_bound(h.begin(), h.end(), s, [&](std::size_t a, std::size_t b) {
      return rank[p][a] < rank[p][b];
    });
    h.insert(pos, s);
    if (h.size() > market.capacities[p]) {
      free.push_back(h.back());
      h.pop_back();
    }
  }
  Matching out{std::vector<AltId>(n, unassigned)};
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t s : held[p]) out.assignment[s] = static_cast<AltId>(p + 1);
  }
  return out;
}

OutcomeRates outcome_stats(const Matching& matching,
                           const std::vector<PartialOrder>& preferences) {
  if (matching.assignment.size() != preferences.size()) {
    throw InputError("matching and preferences differ in size");
  }
  OutcomeRates r;
  if (preferences.empty()) return r;
  for (std::size_t s = 0; s < preferences.size(); ++s) {
    const AltId a = matching.assignment[s];
    if (a == unassigned) continue;
    const auto& q = preferences[s];
    const auto it = std::find(q.begin(), q.end(), a);
    if (it == q.end()) throw InputError("student assigned to an unlisted program");
    const auto pos = static_cast<std::size_t>(it - q.begin());
    r.top1 += pos < 1 ? 1.0 : 0.0;
    r.top3 += pos < 3 ? 1.0 : 0.0;
    r.any += 1.0;
  }
  const double n = static_cast<double>(preferences.size());
  r.top1 /= n;
  r.top3 /= n;
  r.any /= n;
  return r;
}

std::vector<OutcomeRates> assign_many(const std::vector<std::vector<PartialOrder>>& sets,
                                      const std::vector<std::size_t>& capacities,
                                      std::uint64_t seed, int workers) {
  std::vector<OutcomeRates> out(sets.size());
  std::vector<std::exception_ptr> errors(sets.size());
#pragma omp parallel for num_threads(std::max(1, workers)) schedule(dynamic, 1)
  for (std::size_t i = 0; i < sets.size(); ++i) {
    try {
      const Market market = make_market(sets[i], capacities, seed);
      out[i] = outcome_stats(deferred_acceptance(market), sets[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::size_t> load_capacities(const std::filesystem::path& path, std::size_t m) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::size_t> caps(m, 0);
  std::vector<char> seen(m, 0);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto parse = [&](const std::string& text) -> std::size_t {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size() || v < 0) throw std::invalid_argument("bad");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      fail("expected a non-negative integer, got '" + text + "'");
      return 0;
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected program_id,capacity");
    const std::string id_text = line.substr(0, comma);
    if (lineno == 1 && id_text == "program_id") continue;
    const std::size_t id = parse(id_text);
    if (id < 1 || id > m) fail("unknown program_id " + id_text);
    if (seen[id - 1]) fail("duplicate program_id " + id_text);
    seen[id - 1] = 1;
    caps[id - 1] = parse(line.substr(comma + 1));
  }
  for (std::size_t p = 0; p < m; ++p) {
    if (!seen[p]) throw InputError(path.string() + ": no capacity for program " +
                                   std::to_string(p + 1));
  }
  return caps;
}

}  // namespace topk
