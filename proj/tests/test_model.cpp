#include <gtest/gtest.h>

#include <set>

#include "topk/model.hpp"

using namespace topk;

TEST(ModelKind, TagsRoundTrip) {
  for (ModelKind k : all_model_kinds) EXPECT_EQ(parse_model_kind(to_string(k)), k);
  EXPECT_EQ(to_string(ModelKind::apd), "a-pd");
  EXPECT_THROW(parse_model_kind("c-xx"), InputError);
}

TEST(Layout, Sizes) {
  EXPECT_EQ(Layout::make(ModelKind::ci, 4, 0, 7).size(), 8u);  // K forced to 1
  EXPECT_EQ(Layout::make(ModelKind::cci, 4, 2, 1).size(), 3u + 4u + 2u);
  EXPECT_EQ(Layout::make(ModelKind::cld, 4, 1, 3).size(), 4u + 3u * 5u);
  EXPECT_EQ(Layout::make(ModelKind::a, 4, 0, 1).size(), 5u);
  EXPECT_EQ(Layout::make(ModelKind::apd, 4, 1, 1).size(), 4u + 1u + 4u);
  EXPECT_EQ(Layout::make(ModelKind::as, 4, 2, 3).size(), 3u * 7u);
  EXPECT_THROW(Layout::make(ModelKind::cci, 4, 0, 1), InputError);
  EXPECT_THROW(Layout::make(ModelKind::a, 0, 0, 1), InputError);
}

TEST(ParamBlocks, CoverLayoutExactlyOnce) {
  for (ModelKind k : all_model_kinds) {
    const Layout l = Layout::make(k, 5, 2, 3);
    std::vector<int> hits(l.size(), 0);
    std::set<std::string> roles;
    for (const auto& b : param_blocks(l)) {
      roles.insert(b.role);
      for (std::size_t i = 0; i < b.size; ++i) ++hits[b.offset + i];
    }
    for (int h : hits) EXPECT_EQ(h, 1) << to_string(k);
    EXPECT_TRUE(roles.count("delta"));
    EXPECT_TRUE(roles.count("beta"));
    EXPECT_EQ(roles.count("gamma"), k == ModelKind::apd ? 1u : 0u);
    EXPECT_EQ(roles.count("end"), (k == ModelKind::a || k == ModelKind::as) ? 1u : 0u);
  }
}

TEST(Model, ZeroInitAndCovariateRequirement) {
  const Model m(ModelKind::cld, 3, 1, 2);
  for (double v : m.params()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(m.log_prob(PartialOrder{1}), InputError);
  const Model plain(ModelKind::ci, 3);
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(plain.log_prob(PartialOrder{1}, AgentCovariates{x, 1}),
            plain.log_prob(PartialOrder{1}));
}
