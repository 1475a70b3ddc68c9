#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bq/clip.hpp"

namespace bq {

/// How a sampled LoG kernel is rescaled after sampling.
enum class NormMode {
  sum1,  ///< divide by the raw sum (weights sum to 1)
  l1,    ///< divide by the sum of absolute values
  none,  ///< raw samples
};

std::string_view to_string(NormMode mode);
NormMode parse_norm_mode(std::string_view text);

/// Per-channel bank of k x k spatial weights.
struct SpatialKernel {
  std::size_t channels = 0;
  std::size_t size = 0;  ///< odd side length k
  real sigma = 0;
  NormMode norm = NormMode::sum1;
  std::vector<real> weights;  ///< [channel][row][col]

  std::size_t radius() const noexcept { return size / 2; }
  std::size_t taps_per_channel() const noexcept { return size * size; }
  std::span<const real> channel(std::size_t c) const {
    return std::span<const real>(weights).subspan(c * taps_per_channel(), taps_per_channel());
  }
  std::span<real> channel(std::size_t c) {
    return std::span<real>(weights).subspan(c * taps_per_channel(), taps_per_channel());
  }
  real at(std::size_t c, std::size_t row, std::size_t col) const {
    return weights[(c * size + row) * size + col];
  }

  /// Throws ConfigError when k is even/zero or the weight count is wrong.
  void validate() const;
};

/// Per-channel bank of 3-tap temporal weights applied at stride 1 or 3.
struct TemporalKernel {
  static constexpr std::size_t kTaps = 3;

  std::size_t channels = 0;
  std::size_t stride = 3;
  std::vector<real> taps;  ///< [channel][tap], tap 1 is the centre frame

  std::span<const real> channel(std::size_t c) const {
    return std::span<const real>(taps).subspan(c * kTaps, kTaps);
  }
  std::span<real> channel(std::size_t c) { return std::span<real>(taps).subspan(c * kTaps, kTaps); }

  void validate() const;
};

/// Continuous Laplacian of Gaussian at integer offset (x, y):
///   -exp(-r^2 / 2s^2) / (pi s^4) * (1 - r^2 / 2s^2),  r^2 = x^2 + y^2.
real log_value(real sigma, real x, real y);

/// Samples the LoG on the centred integer grid, replicates it per channel and
/// normalizes it. Throws ConfigError for sigma <= 0 or even/small k, and
/// NormalizationError when the divisor for the chosen mode is below 1e-8.
SpatialKernel log_kernel(real sigma, std::size_t k, std::size_t channels, NormMode norm = NormMode::sum1);

/// Second-difference high-pass taps [-1/3, 2/3, -1/3] for every channel.
TemporalKernel temporal_highpass_kernel(std::size_t channels, std::size_t stride);

enum class KernelFormat { json, pgm };

KernelFormat parse_kernel_format(std::string_view text);

/// JSON: {sigma, k, channels, norm_mode, weights: [c][k][k]}.
/// PGM: P5 8-bit heatmap, channels tiled left to right with a one pixel gap,
/// each channel min-max normalized to 0..255 on its own.
void export_kernel(const SpatialKernel& kernel, const std::filesystem::path& path, KernelFormat format);

/// JSON: {stride, channels, taps: [c][3]}. PGM: one row per channel.
void export_kernel(const TemporalKernel& kernel, const std::filesystem::path& path, KernelFormat format);

SpatialKernel load_spatial_kernel_json(const std::filesystem::path& path);
TemporalKernel load_temporal_kernel_json(const std::filesystem::path& path);

/// Maps each channel of the bank to 8-bit intensities exactly as the PGM
/// export does: [channel][row][col].
std::vector<unsigned char> kernel_heatmap(const SpatialKernel& kernel);

}  // namespace bq
