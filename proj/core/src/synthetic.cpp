#include "bq/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bq::synthetic {

VideoClip random_clip(const Shape& shape, std::uint64_t seed, real lo, real hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<real> dist(lo, hi);
  std::vector<real> data(shape.numel());
  for (real& v : data) v = dist(rng);
  return VideoClip(shape, std::move(data));
}

VideoClip static_clip(const Shape& shape, std::uint64_t seed) {
  const VideoClip frame = random_clip(Shape{1, shape.c, shape.h, shape.w}, seed);
  VideoClip out(shape);
  for (std::size_t t = 0; t < shape.t; ++t) {
    for (std::size_t c = 0; c < shape.c; ++c) std::ranges::copy(frame.plane(0, c), out.plane(t, c).begin());
  }
  return out;
}

VideoClip moving_edge(const Shape& shape, real start, real speed) {
  VideoClip out(shape);
  for (std::size_t t = 0; t < shape.t; ++t) {
    const real edge = edge_position(start, speed, t);
    for (std::size_t x = 0; x < shape.w; ++x) {
      // Fraction of pixel [x, x + 1) lying left of the edge.
      const real v = std::clamp(edge - static_cast<real>(x), real{0}, real{1});
      for (std::size_t c = 0; c < shape.c; ++c) {
        for (std::size_t y = 0; y < shape.h; ++y) out.at(t, c, y, x) = v;
      }
    }
  }
  return out;
}

real edge_energy_fraction(const VideoClip& busy, real start, real speed, real band) {
  real near = 0;
  real total = 0;
  for (std::size_t j = 0; j < busy.frames(); ++j) {
    const real edge = edge_position(start, speed, 3 * j + 1);
    for (std::size_t c = 0; c < busy.channels(); ++c) {
      for (std::size_t y = 0; y < busy.height(); ++y) {
        for (std::size_t x = 0; x < busy.width(); ++x) {
          const real v = busy.at(j, c, y, x);
          total += v * v;
          if (std::abs(static_cast<real>(x) + 0.5 - edge) <= band) near += v * v;
        }
      }
    }
  }
  return total > 0 ? near / total : 0;
}

VideoClip moving_square(const Shape& shape, const SquareMotion& motion) {
  VideoClip out(shape);
  const long side = static_cast<long>(motion.side);
  const long h = static_cast<long>(shape.h);
  const long w = static_cast<long>(shape.w);
  for (std::size_t t = 0; t < shape.t; ++t) {
    const long left = motion.x0 + motion.dx * static_cast<long>(t);
    const long x0 = std::max(left, 0L);
    const long x1 = std::min(left + side, w);
    const long y0 = std::max(motion.y0, 0L);
    const long y1 = std::min(motion.y0 + side, h);
    for (std::size_t c = 0; c < shape.c; ++c) {
      for (long y = y0; y < y1; ++y) {
        for (long x = x0; x < x1; ++x) out.at(t, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1;
      }
    }
  }
  return out;
}

}  // namespace bq::synthetic
