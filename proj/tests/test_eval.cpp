#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracle.hpp"
#include "topk/eval.hpp"

using namespace topk;

namespace {

Dataset make(std::size_t m, std::vector<PartialOrder> orders) {
  Dataset d;
  d.universe = Universe(m);
  d.orders = std::move(orders);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(TestNll, Examples) {
  const Model uniform(ModelKind::ci, 3);
  const auto d = make(3, {PartialOrder{1, 2}, PartialOrder{3, 1}});
  const auto r = test_nll(uniform, d);
  EXPECT_NEAR(r.nll, std::log(18.0), 1e-14);
  EXPECT_EQ(r.impossible, 0u);
  EXPECT_EQ(r.n, 2u);
  // adding a length-1 record (prob 1/9) changes the mean accordingly
  auto d2 = d;
  d2.orders.push_back(PartialOrder{2});
  EXPECT_NEAR(test_nll(uniform, d2).nll, (2 * std::log(18.0) + std::log(9.0)) / 3, 1e-14);
}

TEST(TestNll, ImpossibleRecordsAreCounted) {
  Model model(ModelKind::ci, 3);
  model.length_block()[0] = -std::numeric_limits<double>::infinity();
  const auto r = test_nll(model, make(3, {PartialOrder{1}, PartialOrder{1, 2}, PartialOrder{3}}));
  EXPECT_EQ(r.impossible, 2u);
  EXPECT_TRUE(std::isinf(r.nll));
}

TEST(TestNll, EntropyIdentity) {
  std::mt19937_64 rng(1);
  for (ModelKind kind : {ModelKind::ci, ModelKind::cld, ModelKind::a, ModelKind::as}) {
    Model model(kind, 3, 0, 2);
    oracle::randomize(model, rng);
    const bool aug = !is_composite(kind);
    double entropy = 0.0, weighted = 0.0;
    for (const auto& q : oracle::outcome_space(3, aug)) {
      const double p = oracle::model_prob(model, q);
      entropy -= p * std::log(p);
      weighted += p * test_nll(model, make(3, {q})).nll;
    }
    EXPECT_NEAR(weighted, entropy, 1e-6);
  }
}

TEST(TestNll, ConditionNonempty) {
  const Model a(ModelKind::a, 3);
  const auto d = make(3, {PartialOrder{1}});
  EXPECT_NEAR(test_nll(a, d, {true}).nll, -std::log((1.0 / 12.0) / 0.75), 1e-14);
  const Model ci(ModelKind::ci, 3);
  EXPECT_EQ(test_nll(ci, d, {true}).nll, test_nll(ci, d).nll);
}

TEST(Replicates, ShapeAndDeterminism) {
  const Model model(ModelKind::cld, 4, 0, 2);
  const auto one = replicate_sample(model, 5, 1, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size(), 5u);
  const auto a = replicate_sample(model, 50, 4, 9);
  const auto b = replicate_sample(model, 50, 4, 9, nullptr, {false, 3});
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(a[r].orders, b[r].orders);
  EXPECT_NE(a[0].orders, a[1].orders);
}

TEST(Replicates, UniformCIPooledLength) {
  const Model model(ModelKind::ci, 3);
  const auto reps = replicate_sample(model, 10'000, 100, 5, nullptr, {false, 4});
  Dataset truth = make(3, {PartialOrder{1}, PartialOrder{1, 2}, PartialOrder{1, 2, 3}});
  const auto s = length_stats(reps, truth);
  EXPECT_LT(s.tv, 0.01);
  EXPECT_NEAR(s.mean_of_means, 2.0, 0.01);
}

TEST(Replicates, CovariatesReusedAndNoEmpty) {
  std::mt19937_64 rng(2);
  Model model(ModelKind::cci, 3, 2);
  oracle::randomize(model, rng);
  const auto x = oracle::random_covariates(4, 3, 2, rng);
  const auto reps = replicate_sample(model, 6, 2, 1, &x);
  ASSERT_TRUE(reps[0].covariates);
  EXPECT_EQ(reps[0].covariates->at(5, 3, 1), x.at(1, 3, 1));
  EXPECT_THROW(replicate_sample(model, 6, 2, 1), InputError);

  Model a(ModelKind::a, 3);
  a.bank_utilities(0)[3] = 1.0;
  for (const auto& r : replicate_sample(a, 500, 3, 2, nullptr, {true, 1})) {
    for (const auto& q : r.orders) ASSERT_FALSE(q.empty());
  }
  a.bank_utilities(0)[3] = 50.0;
  EXPECT_THROW(replicate_sample(a, 1, 1, 2, nullptr, {true, 1}), NumericError);
}

TEST(LengthStats, Examples) {
  const auto twos = make(3, {PartialOrder{1, 2}, PartialOrder{2, 3}});
  const auto s = length_stats({twos, twos}, twos);
  EXPECT_EQ(s.truth.mean, 2.0);
  EXPECT_EQ(s.truth.std, 0.0);
  EXPECT_EQ(s.mean_of_means, s.truth.mean);
  EXPECT_EQ(s.std_of_means, 0.0);
  EXPECT_EQ(s.tv, 0.0);
  EXPECT_THROW(length_stats({}, twos), InputError);
}

TEST(Demand, Examples) {
  const auto d = demand_shares(make(2, {PartialOrder{1, 2}, PartialOrder{1}}));
  EXPECT_EQ(d.first, (std::vector<double>{1.0, 0.0}));
  EXPECT_NEAR(d.overall[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.overall[1], 1.0 / 3.0, 1e-15);
  const auto single = demand_shares(make(3, {PartialOrder{3, 1}}));
  EXPECT_EQ(single.first, (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(single.overall, (std::vector<double>{0.5, 0, 0.5}));
}

TEST(Demand, SharesSumToOne) {
  std::mt19937_64 rng(3);
  const auto d = oracle::random_dataset(5, 321, 0, rng, true);
  const auto s = demand_shares(d);
  double first = s.empty, overall = 0.0;
  for (double v : s.first) first += v;
  for (double v : s.overall) overall += v;
  EXPECT_NEAR(first, 1.0, 1e-9);
  EXPECT_NEAR(overall, 1.0, 1e-9);
  EXPECT_GT(s.empty, 0.0);
}

TEST(Demand, UniformFirstPositionWithinThreeStandardErrors) {
  const Model model(ModelKind::a, 3);
  const auto reps = replicate_sample(model, 30'000, 1, 4);
  const auto s = demand_shares(reps[0]);
  const double p = 0.25, se = std::sqrt(p * (1 - p) / 30'000);
  for (double v : s.first) EXPECT_LT(std::abs(v - p), 3 * se);
}

TEST(TvDistance, Examples) {
  const std::vector<double> p{0.5, 0.5}, q{0.75, 0.25}, a{1, 0}, b{0, 1};
  EXPECT_EQ(tv_distance(p, p), 0.0);
  EXPECT_EQ(tv_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 0.25);
  const std::vector<double> three{0.2, 0.3, 0.5};
  EXPECT_THROW(tv_distance(p, three), InputError);
  const std::vector<double> unnormalized{0.5, 0.6};
  EXPECT_THROW(tv_distance(p, unnormalized), InputError);
}

TEST(PlotData, FilesRowsAndDeterminism) {
  const auto dir = std::filesystem::temp_directory_path() / "topk_eval_plot";
  std::filesystem::remove_all(dir);
  const auto truth = make(3, {PartialOrder{1, 2}, PartialOrder{3}, PartialOrder{2, 1, 3}});
  EvalReport report;
  report.alternatives = {"x", "y", "z"};
  for (ModelKind kind : {ModelKind::ci, ModelKind::a}) {
    const Model model(kind, 3);
    const auto reps = replicate_sample(model, 20, 3, 1);
    report.models.push_back(evaluate_model(std::string(to_string(kind)), model, truth, reps));
  }
  emit_plot_data(report, dir);
  const std::string nll = slurp(dir / "nll_by_model.csv");
  EXPECT_EQ(std::count(nll.begin(), nll.end(), '\n'), 3);
  const std::string demand = slurp(dir / "demand_by_alternative.csv");
  emit_plot_data(report, dir);
  EXPECT_EQ(slurp(dir / "demand_by_alternative.csv"), demand);
  EXPECT_EQ(slurp(dir / "nll_by_model.csv"), nll);

  const std::vector<std::string> groups{"g1", "g2", "g1"};
  emit_plot_data(report, dir, &groups);
  const std::string grouped = slurp(dir / "demand_by_alternative.csv");
  EXPECT_NE(grouped.find(",g1,"), std::string::npos);
  EXPECT_EQ(grouped.find(",x,"), std::string::npos);

  report.models[0].length.replicates.clear();
  report.models[0].replicate_demand.clear();
  try {
    emit_plot_data(report, dir);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()), "no replicates");
  }
  std::filesystem::remove_all(dir);
}
