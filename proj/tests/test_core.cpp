#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracle.hpp"
#include "topk/core.hpp"

using namespace topk;

TEST(ExtensionCount, Examples) {
  EXPECT_EQ(extension_count(1, 3), 2u);
  EXPECT_EQ(extension_count(5, 5), 1u);
  EXPECT_EQ(extension_count(2, 5), 6u);
  EXPECT_EQ(extension_count(0, 4), 24u);
  EXPECT_THROW(extension_count(4, 3), std::domain_error);
}

TEST(EnumeratePartialOrders, Counts) {
  EXPECT_EQ(enumerate_partial_orders(1).size(), 1u);
  EXPECT_EQ(enumerate_partial_orders(3).size(), 15u);
  EXPECT_EQ(enumerate_partial_orders(4).size(), 64u);
  // sum_{i=1..m} m!/(m-i)! computed independently
  for (std::size_t m = 1; m <= 5; ++m) {
    std::uint64_t expect = 0;
    for (std::size_t i = 1; i <= m; ++i) {
      std::uint64_t t = 1;
      for (std::size_t j = m - i + 1; j <= m; ++j) t *= j;
      expect += t;
    }
    const auto all = enumerate_partial_orders(m);
    EXPECT_EQ(all.size(), expect) << "m=" << m;
    EXPECT_EQ(partial_order_count(m), expect);
    std::set<PartialOrder> unique(all.begin(), all.end());
    EXPECT_EQ(unique.size(), all.size());
    const auto ref = oracle::outcome_space(m);
    EXPECT_EQ(std::set<PartialOrder>(ref.begin(), ref.end()), unique);
  }
}

TEST(EnumeratePartialOrders, RefusesAboveCap) {
  EXPECT_THROW(enumerate_partial_orders(7), std::length_error);
  EXPECT_EQ(enumerate_partial_orders(4, 4).size(), 64u);
  EXPECT_THROW(enumerate_partial_orders(5, 4), std::length_error);
}

TEST(EnumerateTotalOrders, FilterMatchesExtensionCount) {
  for (std::size_t m = 1; m <= 5; ++m) {
    const auto totals = enumerate_total_orders(m);
    for (const auto& q : enumerate_partial_orders(m)) {
      const auto hits = std::count_if(totals.begin(), totals.end(), [&](const PartialOrder& r) {
        return std::equal(q.begin(), q.end(), r.begin());
      });
      EXPECT_EQ(static_cast<std::uint64_t>(hits), extension_count(q.length(), m));
    }
  }
}

TEST(ValidateOrder, Examples) {
  const Universe u(3);
  EXPECT_NO_THROW(validate_order(PartialOrder{1, 2}, u));
  try {
    validate_order(PartialOrder{1, 1}, u);
    FAIL();
  } catch (const OrderValidationError& e) {
    EXPECT_EQ(e.kind(), OrderError::duplicate);
  }
  try {
    validate_order(PartialOrder{4}, u);
    FAIL();
  } catch (const OrderValidationError& e) {
    EXPECT_EQ(e.kind(), OrderError::out_of_range);
  }
  try {
    validate_order(PartialOrder{}, u);
    FAIL();
  } catch (const OrderValidationError& e) {
    EXPECT_EQ(e.kind(), OrderError::empty);
  }
  EXPECT_NO_THROW(validate_order(PartialOrder{}, u, true));
  EXPECT_THROW(validate_order(PartialOrder{0}, u), InputError);
}

TEST(Universe, Labels) {
  EXPECT_THROW(Universe(0), InputError);
  EXPECT_THROW(Universe(2, {"a"}), InputError);
  const Universe u(2, {"a", "b"});
  EXPECT_EQ(u.label(2), "b");
  EXPECT_EQ(Universe(3).label(3), "3");
}

TEST(Dataset, CovariateShapeChecked) {
  Dataset d;
  d.universe = Universe(2);
  d.orders = {PartialOrder{1}, PartialOrder{2, 1}};
  EXPECT_NO_THROW(validate_dataset(d));
  d.covariates.emplace(1, 2, 1);
  EXPECT_THROW(validate_dataset(d), InputError);
  d.covariates.emplace(2, 2, 1);
  EXPECT_NO_THROW(validate_dataset(d));
  d.covariates->at(1, 2, 0) = 3.5;
  EXPECT_DOUBLE_EQ(d.agent(1).item(2)[0], 3.5);
}
