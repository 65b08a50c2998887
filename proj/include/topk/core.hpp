#pragma once

// Domain types for top-k partial orders and combinatorial helpers over the
// outcome spaces (total orders, partial orders, completions of a prefix).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topk {

// Alternative ids are 1-based and contiguous: 1..m.
using AltId = std::uint32_t;

// Malformed user input (files, flags, records). Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite objective, impossible training record, divergence. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OrderError { none, empty, duplicate, out_of_range };

class OrderValidationError : public InputError {
 public:
  OrderValidationError(OrderError kind, const std::string& what)
      : InputError(what), kind_(kind) {}
  OrderError kind() const noexcept { return kind_; }

 private:
  OrderError kind_;
};

class Universe {
 public:
  explicit Universe(std::size_t m);
  Universe(std::size_t m, std::vector<std::string> labels);

  std::size_t size() const noexcept { return m_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  // Display name for id; falls back to the decimal id.
  std::string label(AltId id) const;

 private:
  std::size_t m_;
  std::vector<std::string> labels_;
};

// A strict top-k ordering q_1 > q_2 > ... > q_k of distinct alternatives.
class PartialOrder {
 public:
  PartialOrder() = default;
  explicit PartialOrder(std::vector<AltId> items) : items_(std::move(items)) {}
  PartialOrder(std::initializer_list<AltId> items) : items_(items) {}

  std::size_t length() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  AltId operator[](std::size_t pos) const { return items_[pos]; }
  std::span<const AltId> items() const noexcept { return items_; }

  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  friend bool operator==(const PartialOrder&, const PartialOrder&) = default;
  friend auto operator<=>(const PartialOrder&, const PartialOrder&) = default;

 private:
  std::vector<AltId> items_;
};

// Dense n x m x d covariate tensor, row-major by (agent, item, feature).
class CovariateTensor {
 public:
  CovariateTensor() = default;
  CovariateTensor(std::size_t n, std::size_t m, std::size_t d);
  CovariateTensor(std::size_t n, std::size_t m, std::size_t d,
                  std::vector<double> values);

  std::size_t agents() const noexcept { return n_; }
  std::size_t items() const noexcept { return m_; }
  std::size_t features() const noexcept { return d_; }

  double& at(std::size_t agent, AltId item, std::size_t feature);
  double at(std::size_t agent, AltId item, std::size_t feature) const;
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t n_ = 0, m_ = 0, d_ = 0;
  std::vector<double> values_;
};

// Covariates of a single agent: an m x d block, or empty when the model has
// no covariates.
struct AgentCovariates {
  std::span<const double> values;
  std::size_t d = 0;

  bool empty() const noexcept { return d == 0; }
  std::span<const double> item(AltId id) const {
    return values.subspan((id - 1) * d, d);
  }
};

AgentCovariates agent_covariates(const CovariateTensor& x, std::size_t agent);
inline AgentCovariates agent_covariates(const std::optional<CovariateTensor>& x,
                                        std::size_t agent) {
  return x ? agent_covariates(*x, agent) : AgentCovariates{};
}

struct Dataset {
  Universe universe{1};
  std::vector<PartialOrder> orders;
  std::optional<CovariateTensor> covariates;

  std::size_t size() const noexcept { return orders.size(); }
  std::size_t m() const noexcept { return universe.size(); }
  AgentCovariates agent(std::size_t i) const {
    return agent_covariates(covariates, i);
  }
};

// Throws OrderValidationError. Empty orders are rejected unless allow_empty.
void validate_order(const PartialOrder& q, const Universe& u,
                    bool allow_empty = false);
// Checks every order and the covariate shape.
void validate_dataset(const Dataset& data, bool allow_empty = false);

// (m - k)!, the number of total orders extending a length-k prefix.
// Throws std::domain_error when k > m or the value overflows 64 bits.
std::uint64_t extension_count(std::size_t k, std::size_t m);

// sum_{i=1..m} m!/(m-i)!
std::uint64_t partial_order_count(std::size_t m);

inline constexpr std::size_t default_enumeration_cap = 6;

// All top-k partial orders for k = 1..m, grouped by length then
// lexicographically. Throws std::length_error when m > cap.
std::vector<PartialOrder> enumerate_partial_orders(
    std::size_t m, std::size_t cap = default_enumeration_cap);

// All m! total orders, lexicographic. Same cap semantics.
std::vector<PartialOrder> enumerate_total_orders(
    std::size_t m, std::size_t cap = default_enumeration_cap);

}  // namespace topk
