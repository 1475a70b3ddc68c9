#include "bq/conv.hpp"

#include <algorithm>
#include <vector>

#include "bq/error.hpp"
#include "bq/parallel.hpp"

namespace bq {

TemporalBoundary boundary_for_stride(std::size_t stride) {
  if (stride == 3) return TemporalBoundary::valid_aligned;
  if (stride == 1) return TemporalBoundary::replicate;
  throw ConfigError("temporal stride must be 1 or 3, got " + std::to_string(stride));
}

std::size_t temporal_output_frames(std::size_t frames, std::size_t stride, TemporalBoundary boundary) {
  if (stride == 3 && boundary == TemporalBoundary::valid_aligned) {
    if (frames % 3 != 0) {
      throw DimensionError("stride-3 temporal conv needs a multiple of 3 frames, got " + std::to_string(frames));
    }
    return frames / 3;
  }
  if (stride == 1 && boundary == TemporalBoundary::replicate) return frames;
  throw ConfigError("unsupported temporal (stride, boundary) combination");
}

std::size_t temporal_source_frame(std::size_t out_t, std::size_t tap, std::size_t frames, std::size_t stride,
                                  TemporalBoundary boundary) noexcept {
  if (boundary == TemporalBoundary::valid_aligned) return out_t * stride + tap;
  const long src = static_cast<long>(out_t) + static_cast<long>(tap) - 1;
  return static_cast<std::size_t>(std::clamp(src, 0L, static_cast<long>(frames) - 1));
}

VideoClip channelwise_conv2d(const VideoClip& clip, const SpatialKernel& bank) {
  bank.validate();
  const Shape& s = clip.shape();
  if (bank.channels != s.c) {
    throw DimensionError("spatial bank has " + std::to_string(bank.channels) + " channels, clip has " +
                         std::to_string(s.c));
  }
  const long k = static_cast<long>(bank.size);
  const long r = static_cast<long>(bank.radius());
  const long h = static_cast<long>(s.h);
  const long w = static_cast<long>(s.w);

  VideoClip out(s);
  parallel_for(s.t * s.c, [&](std::size_t plane) {
    const std::size_t t = plane / s.c;
    const std::size_t c = plane % s.c;
    const auto src = clip.plane(t, c);
    const auto wts = bank.channel(c);
    auto dst = out.plane(t, c);
    // Tap-major accumulation: each output element sums taps in (i, j) order.
    std::vector<real> acc(s.plane(), 0.0);
    for (long i = 0; i < k; ++i) {
      for (long j = 0; j < k; ++j) {
        const real wv = wts[static_cast<std::size_t>(i * k + j)];
        const long dy = i - r;
        const long dx = j - r;
        const long y0 = std::max(0L, -dy);
        const long y1 = std::min(h, h - dy);
        const long x0 = std::max(0L, -dx);
        const long x1 = std::min(w, w - dx);
        for (long y = y0; y < y1; ++y) {
          const real* in_row = src.data() + (y + dy) * w + dx;
          real* acc_row = acc.data() + y * w;
          for (long x = x0; x < x1; ++x) acc_row[x] += wv * in_row[x];
        }
      }
    }
    std::copy(acc.begin(), acc.end(), dst.begin());
  });
  out.check_finite("channelwise_conv2d");
  return out;
}

VideoClip channelwise_conv1d_temporal(const VideoClip& clip, const TemporalKernel& bank, std::size_t stride,
                                      TemporalBoundary boundary) {
  bank.validate();
  const Shape& s = clip.shape();
  if (bank.channels != s.c) {
    throw DimensionError("temporal bank has " + std::to_string(bank.channels) + " channels, clip has " +
                         std::to_string(s.c));
  }
  const std::size_t frames_out = temporal_output_frames(s.t, stride, boundary);
  VideoClip out(Shape{frames_out, s.c, s.h, s.w});
  parallel_for(frames_out * s.c, [&](std::size_t plane) {
    const std::size_t t = plane / s.c;
    const std::size_t c = plane % s.c;
    const auto taps = bank.channel(c);
    auto dst = out.plane(t, c);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t m = 0; m < TemporalKernel::kTaps; ++m) {
      const auto src = clip.plane(temporal_source_frame(t, m, s.t, stride, boundary), c);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += taps[m] * src[p];
    }
  });
  out.check_finite("channelwise_conv1d_temporal");
  return out;
}

}  // namespace bq
