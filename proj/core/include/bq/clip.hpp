#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bq {

using real = double;

/// Extent of a clip: frames x channels x height x width.
struct Shape {
  std::size_t t = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t numel() const noexcept { return t * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense rank-4 clip, stored t-major then channel then row-major pixels.
///
/// Every constructor validates the shape (all extents >= 1) and that all
/// values are finite, so a VideoClip in hand always satisfies both.
class VideoClip {
 public:
  /// All-zero clip.
  explicit VideoClip(Shape shape);
  VideoClip(Shape shape, std::vector<real> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t frames() const noexcept { return shape_.t; }
  std::size_t channels() const noexcept { return shape_.c; }
  std::size_t height() const noexcept { return shape_.h; }
  std::size_t width() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const real> data() const noexcept { return data_; }
  std::span<real> data() noexcept { return data_; }

  std::size_t offset(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return ((t * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  real at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[offset(t, c, y, x)];
  }
  real& at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[offset(t, c, y, x)];
  }

  /// One h x w image of frame t, channel c.
  std::span<const real> plane(std::size_t t, std::size_t c) const noexcept {
    return std::span<const real>(data_).subspan(offset(t, c, 0, 0), shape_.plane());
  }
  std::span<real> plane(std::size_t t, std::size_t c) noexcept {
    return std::span<real>(data_).subspan(offset(t, c, 0, 0), shape_.plane());
  }

  /// Throws ValidationError if any value is NaN or infinite. Mutating
  /// accessors bypass the check, so kernels call this before returning.
  void check_finite(const char* where) const;

  bool operator==(const VideoClip&) const = default;

 private:
  Shape shape_;
  std::vector<real> data_;
};

VideoClip new_clip(std::size_t t, std::size_t c, std::size_t h, std::size_t w, std::vector<real> data);

/// Largest absolute elementwise difference; shapes must match.
real max_abs_diff(const VideoClip& a, const VideoClip& b);
real max_abs(const VideoClip& a);

}  // namespace bq
