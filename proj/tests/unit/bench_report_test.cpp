#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "bq/bench.hpp"
#include "bq/error.hpp"
#include "bq/report.hpp"

namespace bq {
namespace {

TEST(Bench, TooFewRepeatsIsConfigError) {
  EXPECT_THROW(run_bench({Shape{3, 1, 8, 8}}, 1, {}), ConfigError);
  EXPECT_THROW(run_bench({Shape{3, 1, 8, 8}}, 2, {}), ConfigError);
}

TEST(Bench, ReportsBothImplementations) {
  const auto report = run_bench({Shape{3, 3, 16, 16}, Shape{6, 1, 12, 20}}, 3, {});
  ASSERT_EQ(report.results.size(), 2u);
  EXPECT_TRUE(report.all_match());
  for (const auto& r : report.results) {
    EXPECT_EQ(r.separable.seconds.size(), 3u);
    EXPECT_EQ(r.direct.seconds.size(), 3u);
    EXPECT_GT(r.separable.macs, 0u);
    EXPECT_EQ(r.separable.macs, r.direct.macs);
    EXPECT_LE(r.max_abs_diff, 1e-5);
    EXPECT_TRUE(r.faster == "separable" || r.faster == "direct");
  }
  EXPECT_EQ(report.results[0].separable.macs, 3u * 3 * 256 * 81 + 1u * 3 * 256 * 3);
  const auto doc = nlohmann::json::parse(to_json(report));
  EXPECT_EQ(doc.at("results").size(), 2u);
  EXPECT_TRUE(doc.at("results")[0].contains("max_abs_diff"));
}

TEST(Bench, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(Report, NullsForMissingFields) {
  MbpmReport report;
  report.params = 252;
  const auto doc = nlohmann::json::parse(to_json(report));
  EXPECT_EQ(doc.at("params"), 252);
  EXPECT_TRUE(doc.at("macs").is_null());
  EXPECT_TRUE(doc.at("max_rel_err").is_null());
  EXPECT_TRUE(doc.at("accuracy").is_null());
  EXPECT_TRUE(doc.at("loss_curve").is_array());
}

}  // namespace
}  // namespace bq
