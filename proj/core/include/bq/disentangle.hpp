#pragma once

#include <cstddef>
#include <optional>

#include "bq/clip.hpp"
#include "bq/mbpm.hpp"
#include "bq/resample.hpp"

namespace bq {

struct DisentangleConfig {
  real sigma = 1.1;
  std::size_t k = 9;
  NormMode norm = NormMode::sum1;
  /// Quiet stream spatial size.
  std::size_t quiet_h = 160;
  std::size_t quiet_w = 160;
  /// Optional resize of the input before filtering; unset keeps the clip's
  /// own resolution for the busy stream.
  std::optional<ResizePolicy> busy_resize;
  /// Expected segment count N (clip length 3N); 0 accepts any multiple of 3.
  std::size_t segments = 0;

  void validate() const;
};

struct DisentangledPair {
  VideoClip busy;
  VideoClip quiet;
};

/// Stride-3 MBPM output: one busy frame per three input frames.
VideoClip busy_input(const VideoClip& clip, const MbpmParams& params);

/// Avg3(clip) - busy at the busy resolution, before any resize.
VideoClip quiet_raw(const VideoClip& clip, const VideoClip& busy);

/// Bilinear resize of quiet_raw to the quiet size.
VideoClip quiet_input(const VideoClip& clip, const VideoClip& busy, ResizePolicy quiet_size);

/// Stride-3 params built from the config for `channels` input channels.
MbpmParams busy_params(const DisentangleConfig& config, std::size_t channels);

DisentangledPair disentangle(const VideoClip& clip, const DisentangleConfig& config, const MbpmParams& params);

/// Convenience overload building fresh params from the config.
DisentangledPair disentangle(const VideoClip& clip, const DisentangleConfig& config);

}  // namespace bq
