#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bq/bqn.hpp"
#include "bq/error.hpp"
#include "bq/synthetic.hpp"

namespace bq {
namespace {

BqnConfig small_config(std::uint64_t seed, LateralDesign design = LateralDesign::bplc) {
  BqnConfig config;
  config.widths = {4, 6, 8, 8};
  config.classes = 5;
  config.seed = seed;
  config.laterals = laterals_at_every_block(config, design);
  return config;
}

DisentangledPair small_pair(std::uint64_t seed) {
  return DisentangledPair{synthetic::random_clip(Shape{2, 3, 16, 16}, seed, -1, 1),
                          synthetic::random_clip(Shape{2, 3, 12, 12}, seed + 1, 0, 1)};
}

std::vector<real> lateral_free(const BqnGraph& graph, const DisentangledPair& pair) {
  return fuse_features(graph, run_pathway(graph, Pathway::busy, pair.busy),
                       run_pathway(graph, Pathway::quiet, pair.quiet));
}

real max_diff(const std::vector<real>& a, const std::vector<real>& b) {
  EXPECT_EQ(a.size(), b.size());
  real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

LateralParams exact_lateral(std::size_t channels, std::uint64_t seed) {
  LateralParams p;
  p.channels = channels;
  p.mbpm = MbpmParams::init(channels, 0.9, 3, 1);
  p.phi.resize(channels * channels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<real> dist(0, 1);
  for (real& w : p.phi) w = dist(rng);
  p.bn_to_busy = BnState::exact_identity(channels);
  p.bn_to_quiet = BnState::exact_identity(channels);
  return p;
}

TEST(Bplc, InitIdentityOverSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto graph = build_bqn(small_config(seed));
    const auto pair = small_pair(seed * 7);
    EXPECT_LE(max_diff(forward(graph, pair), lateral_free(graph, pair)), 1e-6) << seed;
  }
}

TEST(Bplc, InitIdentityForEveryDesign) {
  for (auto design : {LateralDesign::lc1, LateralDesign::lc2, LateralDesign::lc3, LateralDesign::lc5}) {
    const auto graph = build_bqn(small_config(3, design));
    const auto pair = small_pair(11);
    EXPECT_LE(max_diff(forward(graph, pair), lateral_free(graph, pair)), 1e-6) << to_string(design);
  }
}

TEST(Bplc, EvenIndexAddsBandPassedQuietToBusy) {
  const auto busy = synthetic::random_clip(Shape{2, 4, 8, 8}, 1, -1, 1);
  const auto quiet = synthetic::random_clip(Shape{2, 4, 8, 8}, 2, -1, 1);
  const auto p = exact_lateral(4, 3);
  const auto [b, q] = bplc(busy, quiet, 2, p);
  const auto gamma = mbpm_forward(quiet, p.mbpm);
  VideoClip expected = busy;
  for (std::size_t i = 0; i < expected.size(); ++i) expected.data()[i] += gamma.data()[i];
  EXPECT_LE(max_abs_diff(b, expected), 1e-12);
  EXPECT_EQ(q, quiet);
}

TEST(Bplc, OddIndexAddsMixedBusyToQuiet) {
  const auto busy = synthetic::random_clip(Shape{2, 3, 8, 8}, 4, -1, 1);
  const auto quiet = synthetic::random_clip(Shape{2, 3, 8, 8}, 5, -1, 1);
  const auto p = exact_lateral(3, 6);
  const auto [b, q] = bplc(busy, quiet, 3, p);
  EXPECT_EQ(b, busy);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t o = 0; o < 3; ++o) {
      for (std::size_t y = 0; y < 8; ++y) {
        for (std::size_t x = 0; x < 8; ++x) {
          real expected = quiet.at(t, o, y, x);
          for (std::size_t c = 0; c < 3; ++c) expected += p.phi[o * 3 + c] * busy.at(t, c, y, x);
          EXPECT_NEAR(q.at(t, o, y, x), expected, 1e-12);
        }
      }
    }
  }
}

TEST(Bplc, SourceIsResizedToTarget) {
  const auto busy = synthetic::random_clip(Shape{1, 2, 8, 8}, 7);
  const auto quiet = synthetic::random_clip(Shape{1, 2, 6, 6}, 8);
  const auto p = exact_lateral(2, 9);
  const auto [b2, q2] = bplc(busy, quiet, 2, p);
  EXPECT_EQ(b2.shape(), busy.shape());
  const auto [b3, q3] = bplc(busy, quiet, 3, p);
  EXPECT_EQ(q3.shape(), quiet.shape());
}

TEST(LateralVariants, LcFiveIsBplcWithIdentityFilter) {
  const auto busy = synthetic::random_clip(Shape{3, 2, 8, 8}, 10, -1, 1);
  const auto quiet = synthetic::random_clip(Shape{3, 2, 8, 8}, 11, -1, 1);
  auto p = exact_lateral(2, 12);
  const auto lc5 = lc_variant(busy, quiet, 2, LateralDesign::lc5, p);
  std::ranges::fill(p.mbpm.spatial.weights, 0.0);
  for (std::size_t c = 0; c < 2; ++c) p.mbpm.spatial.weights[c * 9 + 4] = 1.0;
  p.mbpm.temporal.taps = {0, 1, 0, 0, 1, 0};
  const auto ref = bplc(busy, quiet, 2, p);
  EXPECT_LE(max_abs_diff(lc5.first, ref.first), 1e-15);
  EXPECT_EQ(lc5.second, ref.second);
  const auto odd5 = lc_variant(busy, quiet, 3, LateralDesign::lc5, p);
  const auto odd = bplc(busy, quiet, 3, p);
  EXPECT_EQ(odd5.first, odd.first);
  EXPECT_LE(max_abs_diff(odd5.second, odd.second), 1e-15);
}

TEST(LateralVariants, Directions) {
  const auto busy = synthetic::random_clip(Shape{3, 2, 8, 8}, 13, -1, 1);
  const auto quiet = synthetic::random_clip(Shape{3, 2, 8, 8}, 14, -1, 1);
  const auto p = exact_lateral(2, 15);
  for (std::size_t i : {1u, 2u, 3u, 4u}) {
    const auto lc1 = lc_variant(busy, quiet, i, LateralDesign::lc1, p);
    EXPECT_EQ(lc1.second, quiet);
    EXPECT_GT(max_abs_diff(lc1.first, busy), 0.0);
    const auto lc2 = lc_variant(busy, quiet, i, LateralDesign::lc2, p);
    EXPECT_EQ(lc2.first, busy);
    EXPECT_GT(max_abs_diff(lc2.second, quiet), 0.0);
    const auto lc3 = lc_variant(busy, quiet, i, LateralDesign::lc3, p);
    EXPECT_EQ(lc3.first, lc1.first);
    EXPECT_EQ(lc3.second, lc2.second);
  }
}

TEST(LateralVariants, Errors) {
  const auto busy = synthetic::random_clip(Shape{3, 2, 8, 8}, 16);
  const auto p = exact_lateral(2, 17);
  EXPECT_THROW(bplc(busy, busy, 0, p), ConfigError);
  const auto wide = synthetic::random_clip(Shape{3, 3, 8, 8}, 18);
  EXPECT_THROW(bplc(wide, wide, 1, p), ConfigError);
  const auto short_clip = synthetic::random_clip(Shape{2, 2, 8, 8}, 19);
  EXPECT_THROW(bplc(busy, short_clip, 1, p), DimensionError);
}

TEST(BqnGraph, LateralCounts) {
  BqnConfig config;
  config.laterals = laterals_at_every_block(config);
  EXPECT_EQ(build_bqn(config).lateral_count(), 4u);

  BqnConfig deep;
  deep.blocks_per_stage = {3, 4, 6, 3};
  deep.widths = {2, 2, 2, 2};
  deep.laterals = laterals_at_every_block(deep);
  const auto graph = build_bqn(deep);
  EXPECT_EQ(graph.lateral_count(), 16u);
  for (std::size_t b = 0; b < 16; ++b) {
    EXPECT_EQ(graph.laterals[b]->spec.k, b >= 13 ? 3u : 7u) << b;
    EXPECT_EQ(graph.laterals[b]->spec.sigma, 0.9);
    EXPECT_EQ(graph.laterals[b]->mbpm.stride, 1u);
  }
}

TEST(BqnGraph, AlternationPlan) {
  BqnConfig config;
  config.blocks_per_stage = {3, 4, 6, 3};
  config.widths = {2, 2, 2, 2};
  config.laterals = laterals_at_every_block(config);
  const auto plan = fusion_plan(build_bqn(config));
  ASSERT_EQ(plan.size(), 16u);
  for (const auto& site : plan) {
    EXPECT_EQ(site.into_busy, site.index % 2 == 0) << site.index;
    EXPECT_EQ(site.into_quiet, site.index % 2 == 1) << site.index;
  }
}

TEST(BqnGraph, PartialLateralsFollowTheirIndex) {
  BqnConfig config;
  config.laterals = {default_lateral(config, 2), default_lateral(config, 3, LateralDesign::lc3)};
  const auto graph = build_bqn(config);
  EXPECT_FALSE(graph.laterals[0].has_value());
  const auto plan = fusion_plan(graph);
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_TRUE(plan[0].into_busy && !plan[0].into_quiet);
  EXPECT_TRUE(plan[1].into_busy && plan[1].into_quiet);
}

TEST(BqnGraph, OutputShapeAndDeterminism) {
  const auto pair = small_pair(20);
  const auto a = forward(build_bqn(small_config(1)), pair);
  EXPECT_EQ(a.size(), 5u);
  for (real v : a) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(a, forward(build_bqn(small_config(1)), pair));
  EXPECT_NE(a, forward(build_bqn(small_config(2)), pair));
}

TEST(BqnGraph, LateralsDoNotChangeBackbone) {
  auto with = small_config(4);
  auto without = with;
  without.laterals.clear();
  const auto a = build_bqn(with);
  const auto b = build_bqn(without);
  EXPECT_EQ(a.busy.stem.weights, b.busy.stem.weights);
  EXPECT_EQ(a.quiet.blocks.back().conv2.weights, b.quiet.blocks.back().conv2.weights);
  EXPECT_EQ(a.fc_busy.weights, b.fc_busy.weights);
}

TEST(BqnGraph, ForwardShapeErrors) {
  const auto graph = build_bqn(small_config(5));
  DisentangledPair pair = small_pair(21);
  pair.quiet = synthetic::random_clip(Shape{3, 3, 12, 12}, 22);
  EXPECT_THROW(forward(graph, pair), DimensionError);
  pair.quiet = synthetic::random_clip(Shape{2, 1, 12, 12}, 22);
  EXPECT_THROW(forward(graph, pair), DimensionError);
}

TEST(Fusion, ScoreMethods) {
  EXPECT_EQ(fuse_scores({1, 2}, {3, 0}, Fusion::max_after_fc), (std::vector<real>{3, 2}));
  EXPECT_EQ(fuse_scores({1, 2}, {3, 0}, Fusion::avg_after_fc), (std::vector<real>{2, 1}));
  EXPECT_THROW(fuse_scores({1}, {1}, Fusion::concat_before_fc), ConfigError);
  EXPECT_THROW(fuse_scores({1}, {1}, Fusion::avg_before_fc), ConfigError);
  EXPECT_THROW(fuse_scores({1}, {1, 2}, Fusion::avg_after_fc), ConfigError);
}

TEST(Fusion, EveryMethodRuns) {
  const auto pair = small_pair(23);
  for (auto fusion : {Fusion::avg_after_fc, Fusion::avg_before_fc, Fusion::max_after_fc, Fusion::concat_before_fc}) {
    for (bool shared : {true, false}) {
      auto config = small_config(6);
      config.fusion = fusion;
      config.shared_fc = shared;
      const auto graph = build_bqn(config);
      EXPECT_EQ(graph.fc_busy.features, fusion == Fusion::concat_before_fc ? 16u : 8u);
      EXPECT_EQ(graph.fc_quiet.has_value(),
                !shared && (fusion == Fusion::avg_after_fc || fusion == Fusion::max_after_fc));
      EXPECT_EQ(forward(graph, pair).size(), 5u);
    }
  }
}

TEST(Fusion, ClassPermutationPermutesScores) {
  const auto pair = small_pair(24);
  auto graph = build_bqn(small_config(7));
  const auto scores = forward(graph, pair);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  auto permuted = graph;
  const std::size_t f = graph.fc_busy.features;
  for (std::size_t k = 0; k < 5; ++k) {
    std::copy_n(graph.fc_busy.weights.begin() + perm[k] * f, f, permuted.fc_busy.weights.begin() + k * f);
    permuted.fc_busy.bias[k] = graph.fc_busy.bias[perm[k]];
  }
  const auto out = forward(permuted, pair);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(out[k], scores[perm[k]]);
}

TEST(BqnConfigJson, ParseAndRoundTrip) {
  const auto config = parse_bqn_config(R"({
    "blocks": [2, 1, 1, 1], "widths": [4, 4, 8, 8], "classes": 3, "seed": 9,
    "fusion": "max-after-fc", "shared_fc": false,
    "laterals": [{"i": 2}, {"i": 5, "design": "LC-III", "sigma": 1.2, "k": 5, "norm": "l1"}]
  })");
  EXPECT_EQ(config.block_count(), 5u);
  EXPECT_EQ(config.fusion, Fusion::max_after_fc);
  ASSERT_EQ(config.laterals.size(), 2u);
  EXPECT_EQ(config.laterals[0].k, 7u);
  EXPECT_EQ(config.laterals[1].design, LateralDesign::lc3);
  EXPECT_EQ(config.laterals[1].norm, NormMode::l1);
  EXPECT_EQ(config.stage_of(5), Stage::res5);
  const auto again = parse_bqn_config(to_json(config));
  EXPECT_EQ(to_json(again), to_json(config));

  EXPECT_EQ(parse_bqn_config(R"({"laterals": "all"})").laterals.size(), 4u);
  EXPECT_TRUE(parse_bqn_config(R"({"laterals": "none"})").laterals.empty());
}

TEST(BqnConfigJson, Errors) {
  EXPECT_THROW(parse_bqn_config("{"), FormatError);
  EXPECT_THROW(parse_bqn_config(R"({"blocks": "x"})"), FormatError);
  EXPECT_THROW(parse_bqn_config(R"({"laterals": [{"i": 9}]})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"laterals": [{"i": 1}, {"i": 1}]})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"laterals": [{"i": 1, "k": 4}]})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"laterals": [{"i": 1, "design": "LC-IV"}]})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"laterals": "some"})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"fusion": "sum"})"), ConfigError);
  EXPECT_THROW(parse_bqn_config(R"({"widths": [4, 4]})"), ConfigError);
  EXPECT_THROW(load_bqn_config("/nonexistent/graph.json"), IoError);
}

}  // namespace
}  // namespace bq
