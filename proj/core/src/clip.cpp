#include "bq/clip.hpp"

#include <algorithm>
#include <cmath>

#include "bq/error.hpp"

namespace bq {

namespace {

void check_extents(const Shape& s) {
  if (s.t == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw DimensionError("clip extents must be >= 1, got " + to_string(s));
  }
}

}  // namespace

std::string to_string(const Shape& s) {
  return std::to_string(s.t) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

VideoClip::VideoClip(Shape shape) : shape_(shape) {
  check_extents(shape_);
  data_.assign(shape_.numel(), real{0});
}

VideoClip::VideoClip(Shape shape, std::vector<real> data) : shape_(shape), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_.numel()) {
    throw DimensionError("clip " + to_string(shape_) + " needs " + std::to_string(shape_.numel()) +
                         " values, got " + std::to_string(data_.size()));
  }
  check_finite("new_clip");
}

void VideoClip::check_finite(const char* where) const {
  const auto bad = std::find_if(data_.begin(), data_.end(), [](real v) { return !std::isfinite(v); });
  if (bad != data_.end()) {
    throw ValidationError(std::string(where) + ": non-finite value at flat index " +
                          std::to_string(bad - data_.begin()));
  }
}

VideoClip new_clip(std::size_t t, std::size_t c, std::size_t h, std::size_t w, std::vector<real> data) {
  return VideoClip(Shape{t, c, h, w}, std::move(data));
}

real max_abs_diff(const VideoClip& a, const VideoClip& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

real max_abs(const VideoClip& a) {
  real m = 0;
  for (real v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace bq
