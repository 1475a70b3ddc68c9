#include "bq/resample.hpp"

#include <algorithm>
#include <cmath>

#include "bq/error.hpp"
#include "bq/parallel.hpp"

namespace bq {

namespace {

// Source taps and weights for one output coordinate under half-pixel centres.
struct Tap {
  std::size_t lo;
  std::size_t hi;
  real frac;  // weight of hi
};

std::vector<Tap> axis_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const real scale = static_cast<real>(in) / static_cast<real>(out);
  for (std::size_t o = 0; o < out; ++o) {
    real src = (static_cast<real>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, real{0}, static_cast<real>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[o] = Tap{lo, hi, src - static_cast<real>(lo)};
  }
  return taps;
}

}  // namespace

VideoClip bilinear_resize(const VideoClip& clip, ResizePolicy policy) {
  if (policy.out_h == 0 || policy.out_w == 0) throw DimensionError("resize target must be >= 1x1");
  const Shape& in = clip.shape();
  if (in.h == policy.out_h && in.w == policy.out_w) return clip;

  VideoClip out(Shape{in.t, in.c, policy.out_h, policy.out_w});
  const auto ys = axis_taps(in.h, policy.out_h);
  const auto xs = axis_taps(in.w, policy.out_w);
  parallel_for(in.t * in.c, [&](std::size_t plane) {
    const std::size_t t = plane / in.c;
    const std::size_t c = plane % in.c;
    const auto src = clip.plane(t, c);
    auto dst = out.plane(t, c);
    for (std::size_t oy = 0; oy < policy.out_h; ++oy) {
      const Tap ty = ys[oy];
      for (std::size_t ox = 0; ox < policy.out_w; ++ox) {
        const Tap tx = xs[ox];
        const real top = src[ty.lo * in.w + tx.lo] * (1 - tx.frac) + src[ty.lo * in.w + tx.hi] * tx.frac;
        const real bottom = src[ty.hi * in.w + tx.lo] * (1 - tx.frac) + src[ty.hi * in.w + tx.hi] * tx.frac;
        dst[oy * policy.out_w + ox] = top * (1 - ty.frac) + bottom * ty.frac;
      }
    }
  });
  return out;
}

VideoClip temporal_avg_pool(const VideoClip& clip, std::size_t window, std::size_t stride) {
  if (window == 0 || window != stride) {
    throw ConfigError("temporal_avg_pool supports non-overlapping windows only (window == stride)");
  }
  const Shape& in = clip.shape();
  if (in.t % stride != 0) {
    throw DimensionError("temporal_avg_pool: " + std::to_string(in.t) + " frames not divisible by " +
                         std::to_string(stride));
  }
  VideoClip out(Shape{in.t / stride, in.c, in.h, in.w});
  const real inv = 1.0 / static_cast<real>(window);
  for (std::size_t j = 0; j < out.frames(); ++j) {
    for (std::size_t c = 0; c < in.c; ++c) {
      auto dst = out.plane(j, c);
      for (std::size_t p = 0; p < dst.size(); ++p) {
        real acc = 0;
        for (std::size_t m = 0; m < window; ++m) acc += clip.plane(j * stride + m, c)[p];
        dst[p] = acc * inv;
      }
    }
  }
  return out;
}

}  // namespace bq
