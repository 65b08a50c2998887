#include "topk/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace topk {

Universe::Universe(std::size_t m) : m_(m) {
  if (m == 0) throw InputError("universe must contain at least one alternative");
}

Universe::Universe(std::size_t m, std::vector<std::string> labels)
    : m_(m), labels_(std::move(labels)) {
  if (m == 0) throw InputError("universe must contain at least one alternative");
  if (!labels_.empty() && labels_.size() != m) {
    throw InputError("universe has " + std::to_string(m) + " alternatives but " +
                     std::to_string(labels_.size()) + " labels");
  }
}

std::string Universe::label(AltId id) const {
  if (has_labels() && id >= 1 && id <= m_) return labels_[id - 1];
  return std::to_string(id);
}

CovariateTensor::CovariateTensor(std::size_t n, std::size_t m, std::size_t d)
    : n_(n), m_(m), d_(d), values_(n * m * d, 0.0) {}

CovariateTensor::CovariateTensor(std::size_t n, std::size_t m, std::size_t d,
                                 std::vector<double> values)
    : n_(n), m_(m), d_(d), values_(std::move(values)) {
  if (values_.size() != n * m * d) {
    throw InputError("covariate tensor has " + std::to_string(values_.size()) +
                     " entries, expected n*m*d = " + std::to_string(n * m * d));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("covariate tensor has a non-finite entry");
  }
}

double& CovariateTensor::at(std::size_t agent, AltId item, std::size_t feature) {
  return values_[(agent * m_ + (item - 1)) * d_ + feature];
}

double CovariateTensor::at(std::size_t agent, AltId item, std::size_t feature) const {
  return values_[(agent * m_ + (item - 1)) * d_ + feature];
}

AgentCovariates agent_covariates(const CovariateTensor& x, std::size_t agent) {
  const std::size_t block = x.items() * x.features();
  return {x.values().subspan(agent * block, block), x.features()};
}

void validate_order(const PartialOrder& q, const Universe& u, bool allow_empty) {
  const std::size_t m = u.size();
  if (q.empty() && !allow_empty) {
    throw OrderValidationError(OrderError::empty, "empty order");
  }
  if (q.length() > m) {
    throw OrderValidationError(OrderError::duplicate,
                               "order longer than the universe (duplicate ids)");
  }
  std::vector<bool> seen(m + 1, false);
  for (AltId id : q) {
    if (id < 1 || id > m) {
      throw OrderValidationError(OrderError::out_of_range,
                                 "alternative id " + std::to_string(id) +
                                     " outside [1, " + std::to_string(m) + "]");
    }
    if (seen[id]) {
      throw OrderValidationError(OrderError::duplicate,
                                 "alternative id " + std::to_string(id) +
                                     " listed twice");
    }
    seen[id] = true;
  }
}

void validate_dataset(const Dataset& data, bool allow_empty) {
  for (std::size_t i = 0; i < data.orders.size(); ++i) {
    try {
      validate_order(data.orders[i], data.universe, allow_empty);
    } catch (const OrderValidationError& e) {
      throw OrderValidationError(e.kind(),
                                 "record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (data.covariates) {
    const auto& x = *data.covariates;
    if (x.agents() != data.size() || x.items() != data.m()) {
      throw InputError("covariate tensor shape " + std::to_string(x.agents()) + "x" +
                       std::to_string(x.items()) + " does not match dataset " +
                       std::to_string(data.size()) + "x" + std::to_string(data.m()));
    }
  }
}

std::uint64_t extension_count(std::size_t k, std::size_t m) {
  if (k > m) throw std::domain_error("prefix length exceeds universe size");
  std::uint64_t out = 1;
  for (std::uint64_t i = 2; i <= m - k; ++i) {
    if (out > std::numeric_limits<std::uint64_t>::max() / i) {
      throw std::domain_error("extension count overflows 64 bits");
    }
    out *= i;
  }
  return out;
}

std::uint64_t partial_order_count(std::size_t m) {
  std::uint64_t total = 0, falling = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    falling *= (m - i + 1);
    total += falling;
  }
  return total;
}

namespace {

void extend(std::vector<AltId>& prefix, std::vector<bool>& used, std::size_t m,
            std::size_t target, std::vector<PartialOrder>& out) {
  if (prefix.size() == target) {
    out.emplace_back(prefix);
    return;
  }
  for (AltId a = 1; a <= m; ++a) {
    if (used[a]) continue;
    used[a] = true;
    prefix.push_back(a);
    extend(prefix, used, m, target, out);
    prefix.pop_back();
    used[a] = false;
  }
}

void check_cap(std::size_t m, std::size_t cap) {
  if (m > cap) {
    throw std::length_error("refusing to enumerate orders for m = " + std::to_string(m) +
                            " (cap " + std::to_string(cap) + ")");
  }
}

}  // namespace

std::vector<PartialOrder> enumerate_partial_orders(std::size_t m, std::size_t cap) {
  check_cap(m, cap);
  std::vector<PartialOrder> out;
  out.reserve(partial_order_count(m));
  std::vector<AltId> prefix;
  std::vector<bool> used(m + 1, false);
  for (std::size_t k = 1; k <= m; ++k) extend(prefix, used, m, k, out);
  return out;
}

std::vector<PartialOrder> enumerate_total_orders(std::size_t m, std::size_t cap) {
  check_cap(m, cap);
  std::vector<PartialOrder> out;
  std::vector<AltId> prefix;
  std::vector<bool> used(m + 1, false);
  extend(prefix, used, m, m, out);
  return out;
}

}  // namespace topk
