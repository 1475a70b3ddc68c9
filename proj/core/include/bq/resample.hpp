#pragma once

#include <cstddef>

#include "bq/clip.hpp"

namespace bq {

/// Target size for bilinear resizing. Source coordinates use half-pixel
/// centres: src = (dst + 0.5) * in / out - 0.5, clamped to the image.
struct ResizePolicy {
  std::size_t out_h = 1;
  std::size_t out_w = 1;
};

VideoClip bilinear_resize(const VideoClip& clip, ResizePolicy policy);

/// Mean over non-overlapping temporal windows. Only window == stride is
/// supported; clip.t must be a multiple of the stride.
VideoClip temporal_avg_pool(const VideoClip& clip, std::size_t window = 3, std::size_t stride = 3);

}  // namespace bq
