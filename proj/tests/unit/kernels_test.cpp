#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bq/conv.hpp"
#include "bq/error.hpp"
#include "bq/kernels.hpp"
#include "bq/synthetic.hpp"

namespace bq {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bq_kernels_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> read_pgm_pixels(const fs::path& path, std::size_t& w, std::size_t& h) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  std::vector<unsigned char> px(w * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(maxval, 255);
  return px;
}

TEST(LogKernel, CenterValueMatchesClosedForm) {
  const auto raw = log_kernel(1.1, 9, 1, NormMode::none);
  const real expected = -1.0 / (std::numbers::pi * std::pow(1.1, 4));
  EXPECT_NEAR(raw.at(0, 4, 4), expected, 1e-12);
  EXPECT_NEAR(raw.at(0, 4, 4), -0.21741, 5e-6);
  for (real sigma : {0.5, 0.9, 1.1, 2.0}) {
    EXPECT_NEAR(log_kernel(sigma, 7, 1, NormMode::none).at(0, 3, 3),
                -1.0 / (std::numbers::pi * std::pow(sigma, 4)), 1e-12);
  }
}

TEST(LogKernel, EightFoldSymmetryIsExact) {
  for (real sigma : {0.9, 1.1, 1.7}) {
    for (std::size_t k : {3u, 5u, 7u, 9u}) {
      for (NormMode norm : {NormMode::none, NormMode::l1, NormMode::sum1}) {
        const auto bank = log_kernel(sigma, k, 2, norm);
        for (std::size_t c = 0; c < 2; ++c) {
          for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
              EXPECT_EQ(bank.at(c, i, j), bank.at(c, k - 1 - i, k - 1 - j));
              EXPECT_EQ(bank.at(c, i, j), bank.at(c, j, i));
              EXPECT_EQ(bank.at(c, i, j), bank.at(0, i, j));
            }
          }
        }
      }
    }
  }
}

TEST(LogKernel, Sum1NormalizesToOne) {
  const auto bank = log_kernel(1.1, 9, 3, NormMode::sum1);
  for (std::size_t c = 0; c < 3; ++c) {
    real sum = 0;
    for (real w : bank.channel(c)) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(LogKernel, L1NormalizesAbsoluteSum) {
  const auto bank = log_kernel(0.9, 7, 1, NormMode::l1);
  real sum = 0;
  for (real w : bank.channel(0)) sum += std::abs(w);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_LT(bank.at(0, 3, 3), 0.0);
}

TEST(LogKernel, Sum1FlipsSignBecauseRawSumIsNegative) {
  const auto raw = log_kernel(1.1, 9, 1, NormMode::none);
  real sum = 0;
  for (real w : raw.weights) sum += w;
  EXPECT_LT(sum, 0.0);
  EXPECT_GT(log_kernel(1.1, 9, 1, NormMode::sum1).at(0, 4, 4), 0.0);
}

TEST(LogKernel, Deterministic) {
  EXPECT_EQ(log_kernel(1.1, 9, 3).weights, log_kernel(1.1, 9, 3).weights);
}

TEST(LogKernel, InvalidParametersAreConfigErrors) {
  EXPECT_THROW(log_kernel(0.0, 9, 1), ConfigError);
  EXPECT_THROW(log_kernel(-1.0, 9, 1), ConfigError);
  EXPECT_THROW(log_kernel(1.1, 8, 1), ConfigError);
  EXPECT_THROW(log_kernel(1.1, 1, 1), ConfigError);
}

TEST(LogKernel, TinyRawSumIsNormalizationError) {
  // For large kernels the sampled LoG sums to nearly zero.
  EXPECT_THROW(log_kernel(2.0, 31, 1, NormMode::sum1), NormalizationError);
  EXPECT_NO_THROW(log_kernel(2.0, 31, 1, NormMode::l1));
}

TEST(TemporalHighpass, InitTapsExact) {
  const auto bank = temporal_highpass_kernel(3, 3);
  ASSERT_EQ(bank.taps.size(), 9u);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto taps = bank.channel(c);
    EXPECT_EQ(taps[0], -1.0 / 3.0);
    EXPECT_EQ(taps[1], 2.0 / 3.0);
    EXPECT_EQ(taps[2], -1.0 / 3.0);
    EXPECT_NEAR(taps[0] + taps[1] + taps[2], 0.0, 1e-12);
  }
}

TEST(TemporalHighpass, AnnihilatesConstantTriplet) {
  for (real a : {0.0, 0.3, 1.0, 17.25, -5.5}) {
    VideoClip clip(Shape{3, 1, 1, 1}, {a, a, a});
    const auto out = channelwise_conv1d_temporal(clip, temporal_highpass_kernel(1, 3), 3, TemporalBoundary::valid_aligned);
    EXPECT_EQ(out.at(0, 0, 0, 0), 0.0);
  }
}

TEST(ExportKernel, JsonRoundTripIsBitExact) {
  const auto bank = log_kernel(1.1, 9, 3, NormMode::sum1);
  const auto path = scratch("k.json");
  export_kernel(bank, path, KernelFormat::json);
  const auto back = load_spatial_kernel_json(path);
  EXPECT_EQ(back.weights, bank.weights);
  EXPECT_EQ(back.size, 9u);
  EXPECT_EQ(back.channels, 3u);
  EXPECT_EQ(back.sigma, 1.1);
  EXPECT_EQ(back.norm, NormMode::sum1);
}

TEST(ExportKernel, TemporalJsonCarriesInitTaps) {
  const auto path = scratch("t.json");
  export_kernel(temporal_highpass_kernel(3, 3), path, KernelFormat::json);
  const auto back = load_temporal_kernel_json(path);
  EXPECT_EQ(back.taps, temporal_highpass_kernel(3, 3).taps);
  EXPECT_EQ(back.stride, 3u);
}

TEST(ExportKernel, PgmDarkestAtCenterForUnflippedKernel) {
  for (NormMode norm : {NormMode::none, NormMode::l1}) {
    const auto path = scratch("k_none.pgm");
    export_kernel(log_kernel(1.1, 9, 1, norm), path, KernelFormat::pgm);
    std::size_t w = 0;
    std::size_t h = 0;
    const auto px = read_pgm_pixels(path, w, h);
    ASSERT_EQ(w, 9u);
    ASSERT_EQ(h, 9u);
    EXPECT_EQ(px[4 * 9 + 4], 0);
    EXPECT_EQ(*std::min_element(px.begin(), px.end()), 0);
    EXPECT_EQ(std::count(px.begin(), px.end(), 0), 1);
  }
}

TEST(ExportKernel, PgmBrightestAtCenterUnderSum1) {
  const auto path = scratch("k_sum1.pgm");
  export_kernel(log_kernel(1.1, 9, 3, NormMode::sum1), path, KernelFormat::pgm);
  std::size_t w = 0;
  std::size_t h = 0;
  const auto px = read_pgm_pixels(path, w, h);
  ASSERT_EQ(w, 3u * 9u + 2u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(px[4 * w + c * 10 + 4], 255);
}

TEST(ExportKernel, UnwritablePathIsIoError) {
  EXPECT_THROW(export_kernel(log_kernel(1.1, 9, 1), "/nonexistent_dir/k.json", KernelFormat::json), IoError);
}

TEST(ExportKernel, MalformedJsonIsFormatError) {
  const auto path = scratch("bad.json");
  std::ofstream(path) << "{\"sigma\": 1.1}";
  EXPECT_THROW(load_spatial_kernel_json(path), FormatError);
}

TEST(ParseHelpers, NormAndFormat) {
  EXPECT_EQ(parse_norm_mode("l1"), NormMode::l1);
  EXPECT_THROW(parse_norm_mode("L2"), ConfigError);
  EXPECT_EQ(parse_kernel_format("pgm"), KernelFormat::pgm);
  EXPECT_THROW(parse_kernel_format("png"), ConfigError);
}

}  // namespace
}  // namespace bq
