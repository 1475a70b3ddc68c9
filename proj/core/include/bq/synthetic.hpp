#pragma once

#include <cstddef>
#include <cstdint>

#include "bq/clip.hpp"

namespace bq::synthetic {

/// Uniform [lo, hi) values from a seeded mt19937_64.
VideoClip random_clip(const Shape& shape, std::uint64_t seed, real lo = 0, real hi = 1);

/// Every frame equal to frame 0 of a random clip.
VideoClip static_clip(const Shape& shape, std::uint64_t seed);

/// Vertical step edge (bright on the left) moving right by `speed` px per
/// frame, anti-aliased over one pixel. The edge sits at x = start + speed * t
/// in continuous pixel coordinates (pixel x spans [x, x + 1)).
VideoClip moving_edge(const Shape& shape, real start, real speed);

/// Continuous edge position for frame t of moving_edge.
inline real edge_position(real start, real speed, std::size_t t) { return start + speed * static_cast<real>(t); }

/// Share of the busy stream's squared energy in columns whose centre lies
/// within `band` px of the edge at the middle frame of each stride-3 window.
real edge_energy_fraction(const VideoClip& busy, real start, real speed, real band);

struct SquareMotion {
  std::size_t side = 8;
  long x0 = 0;  ///< left column at frame 0
  long y0 = 0;  ///< top row
  long dx = 2;  ///< horizontal px per frame
};

/// Bright square of value 1 on a zero background, clipped at the borders.
VideoClip moving_square(const Shape& shape, const SquareMotion& motion);

}  // namespace bq::synthetic
