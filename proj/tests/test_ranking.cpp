#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "topk/core.hpp"
#include "topk/ranking.hpp"

using namespace topk;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double s = 1.0) {
  std::uniform_real_distribution<double> u(-s, s);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(PlUtility, Examples) {
  const std::vector<double> delta{0.5, 0, 0};
  EXPECT_EQ(pl_utility(PLParams{delta, {}}, {}, 1), 0.5);

  const std::vector<double> zero3{0, 0, 0};
  const std::vector<double> beta{1, 2};
  const std::vector<double> x{1, 1, 0, 0, 0, 0};  // 3 items x 2 features
  const AgentCovariates ax{x, 2};
  EXPECT_DOUBLE_EQ(pl_utility(PLParams{zero3, beta}, ax, 1), 3.0);

  const std::vector<double> beta0{0, 0};
  EXPECT_EQ(pl_utility(PLParams{delta, beta0}, ax, 1), 0.5);

  const std::vector<double> x_bad{1, 1, 1};
  EXPECT_THROW(pl_utility(PLParams{zero3, beta}, AgentCovariates{x_bad, 1}, 1), InputError);
  EXPECT_THROW(pl_utility(PLParams{zero3, beta}, {}, 1), InputError);
}

TEST(PlLogMarginal, Examples) {
  const std::vector<double> zero{0, 0, 0};
  EXPECT_NEAR(pl_log_marginal(PartialOrder{1, 2}, PLParams{zero, {}}), std::log(1.0 / 6.0),
              1e-14);
  const std::vector<double> d{std::log(2.0), 0, 0};
  EXPECT_NEAR(pl_log_marginal(PartialOrder{1}, PLParams{d, {}}), std::log(0.5), 1e-14);
}

TEST(PlLogMarginal, MatchesBruteForceExtensionSum) {
  std::mt19937_64 rng(11);
  for (std::size_t m = 2; m <= 5; ++m) {
    const auto delta = random_vector(m, rng, 2.0);
    const PLParams p{delta, {}};
    for (const auto& q : enumerate_partial_orders(m)) {
      const double brute = oracle::extension_mass(
          q, m, false, [&](std::size_t, AltId a) { return delta[a - 1]; });
      EXPECT_NEAR(std::exp(pl_log_marginal(q, p)), brute, 1e-10);
    }
  }
}

TEST(PlLogMarginal, TotalOrdersNormalize) {
  std::mt19937_64 rng(12);
  for (std::size_t m = 1; m <= 5; ++m) {
    const auto delta = random_vector(m, rng, 2.0);
    double s = 0.0;
    for (const auto& r : enumerate_total_orders(m)) s += std::exp(pl_log_marginal(r, {delta, {}}));
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(PlLogMarginal, ShiftInvariance) {
  std::mt19937_64 rng(13);
  const auto delta = random_vector(5, rng, 3.0);
  auto shifted = delta;
  for (double& v : shifted) v += 4.2;
  for (const auto& q : enumerate_partial_orders(5)) {
    EXPECT_NEAR(pl_log_marginal(q, {delta, {}}), pl_log_marginal(q, {shifted, {}}), 1e-10);
  }
}

TEST(PlLogMarginal, CovariateUtilities) {
  std::mt19937_64 rng(14);
  const std::size_t m = 4, d = 2;
  const auto delta = random_vector(m, rng);
  const auto beta = random_vector(d, rng);
  const auto x = random_vector(m * d, rng);
  const AgentCovariates ax{x, d};
  for (const auto& q : enumerate_partial_orders(m)) {
    const double brute = oracle::extension_mass(q, m, false, [&](std::size_t, AltId a) {
      return delta[a - 1] + beta[0] * x[(a - 1) * d] + beta[1] * x[(a - 1) * d + 1];
    });
    EXPECT_NEAR(std::exp(pl_log_marginal(q, {delta, beta}, ax)), brute, 1e-10);
  }
}

TEST(StratifiedLogProb, BankSelection) {
  std::mt19937_64 rng(15);
  const std::size_t m = 6;
  const auto b1 = random_vector(m, rng), b2 = random_vector(m, rng), b3 = random_vector(m, rng);
  StratifiedPLParams one{{PLParams{b1, {}}}};
  StratifiedPLParams two{{PLParams{b1, {}}, PLParams{b2, {}}}};
  StratifiedPLParams same{{PLParams{b1, {}}, PLParams{b1, {}}, PLParams{b1, {}}}};
  const PartialOrder q5{3, 1, 6, 2, 5};
  const PartialOrder q1{4};
  EXPECT_EQ(stratified_log_prob(q5, one), pl_log_marginal(q5, {b1, {}}));
  EXPECT_EQ(stratified_log_prob(q5, two), pl_log_marginal(q5, {b2, {}}));
  EXPECT_EQ(stratified_log_prob(q1, two), pl_log_marginal(q1, {b1, {}}));
  for (const auto& q : {q1, q5, PartialOrder{2, 3}}) {
    EXPECT_EQ(stratified_log_prob(q, same), pl_log_marginal(q, {b1, {}}));
  }
  (void)b3;
  EXPECT_EQ(stratum_index(1, 3), 0u);
  EXPECT_EQ(stratum_index(3, 3), 2u);
  EXPECT_EQ(stratum_index(9, 3), 2u);
}

TEST(PlLogMarginalGrad, FiniteDifferences) {
  std::mt19937_64 rng(16);
  const std::size_t m = 5, d = 2;
  auto delta = random_vector(m, rng);
  auto beta = random_vector(d, rng);
  const auto x = random_vector(m * d, rng);
  const AgentCovariates ax{x, d};
  const PartialOrder q{4, 2, 5};
  std::vector<double> gd(m, 0.0), gb(d, 0.0);
  const double lp = pl_log_marginal_grad(q, {delta, beta}, ax, 1.0, PLGradient{gd, gb});
  EXPECT_NEAR(lp, pl_log_marginal(q, {delta, beta}, ax), 1e-14);
  const double h = 1e-5;
  auto fd = [&](std::vector<double>& v, std::size_t i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = pl_log_marginal(q, {delta, beta}, ax);
    v[i] = keep - h;
    const double dn = pl_log_marginal(q, {delta, beta}, ax);
    v[i] = keep;
    return (up - dn) / (2 * h);
  };
  for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(gd[i], fd(delta, i), 1e-8);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(gb[i], fd(beta, i), 1e-8);
}

TEST(SamplePlPrefix, LengthAndDistinct) {
  std::mt19937_64 seed(17);
  const auto delta = random_vector(6, seed);
  Rng rng(5);
  for (std::size_t len = 1; len <= 6; ++len) {
    const PartialOrder q = sample_pl_prefix({delta, {}}, {}, len, rng);
    EXPECT_EQ(q.length(), len);
    EXPECT_NO_THROW(validate_order(q, Universe(6)));
  }
}
