#pragma once

#include <cstddef>

#include "bq/clip.hpp"
#include "bq/kernels.hpp"

namespace bq {

/// Temporal edge handling for the 3-tap channel-wise convolution.
enum class TemporalBoundary {
  valid_aligned,  ///< stride 3: output j reads frames 3j, 3j+1, 3j+2
  replicate,      ///< stride 1: output t reads t-1, t, t+1 with clamped ends
};

/// Per-channel 2D cross-correlation with zero padding (k-1)/2, so the spatial
/// size is preserved:  out(y, x) = sum_ij w(i, j) * in(y + i - r, x + j - r).
VideoClip channelwise_conv2d(const VideoClip& clip, const SpatialKernel& bank);

/// Per-channel 3-tap temporal cross-correlation. Supported pairs are
/// (3, valid_aligned) and (1, replicate); anything else is a ConfigError.
VideoClip channelwise_conv1d_temporal(const VideoClip& clip, const TemporalKernel& bank, std::size_t stride,
                                      TemporalBoundary boundary);

/// Source frame read by output frame `out_t` through tap `tap` (0..2).
std::size_t temporal_source_frame(std::size_t out_t, std::size_t tap, std::size_t frames, std::size_t stride,
                                  TemporalBoundary boundary) noexcept;

/// Number of output frames for a validated (stride, boundary) pair.
std::size_t temporal_output_frames(std::size_t frames, std::size_t stride, TemporalBoundary boundary);

TemporalBoundary boundary_for_stride(std::size_t stride);

}  // namespace bq
