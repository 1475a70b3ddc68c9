#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bq/clip.hpp"

namespace bq {

enum class FrameFormat { ppm, png };

/// A directory of still frames read in lexicographic filename order.
struct FrameSequenceSource {
  std::filesystem::path directory;
  /// Substring every frame filename must contain; empty matches all files
  /// with the format's extension.
  std::string pattern;
  FrameFormat format = FrameFormat::ppm;
  std::size_t channels = 3;
};

/// Decoded 8-bit image, interleaved channels.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads binary PPM (P6) or PGM (P5); 16-bit samples are reduced to 8 bits.
/// Returns samples scaled by maxval into [0, 1] via the second overload.
Image8 read_pnm(const std::filesystem::path& path);
std::vector<real> read_pnm_scaled(const std::filesystem::path& path, std::size_t& width, std::size_t& height,
                                  std::size_t& channels);
void write_pnm(const std::filesystem::path& path, const Image8& image);

Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// Stacks frames into a clip with values in [0, 1]. Throws IngestionError for
/// fewer than 3 frames, mixed sizes or a channel count that cannot be mapped,
/// and IoError for unreadable files. Grayscale frames are replicated when
/// three channels are expected.
VideoClip load_frames(const FrameSequenceSource& source);

/// Writes frames t = 0..T-1 as frame_00000.ppm, ... (values clamped to [0,1]).
void save_frames(const VideoClip& clip, const std::filesystem::path& directory);

/// BQC1 raw clip: "BQC1", u32 dtype (1 = real32, 2 = real64), u32 t, c, h, w,
/// then the t-major row-major payload, all little endian.
enum class RawDtype : std::uint32_t { real32 = 1, real64 = 2 };

void save_raw(const VideoClip& clip, const std::filesystem::path& path, RawDtype dtype = RawDtype::real32);
VideoClip load_raw(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_raw(const VideoClip& clip, RawDtype dtype = RawDtype::real32);
VideoClip decode_raw(const std::vector<std::uint8_t>& bytes);

enum class VisualizationMode { per_frame_minmax, global_minmax };

struct VisualizationOptions {
  VisualizationMode mode = VisualizationMode::per_frame_minmax;
  /// Signed data: map [-m, m] with m = max |v| so that zero sits at mid-gray.
  /// Otherwise [min, max] maps to [0, 255].
  bool zero_anchored = true;
};

/// 8-bit rendering of frame t: grayscale for one channel, RGB for three,
/// channel 0 for any other count. Constant ranges map to 128.
Image8 render_frame(const VideoClip& clip, std::size_t t, const VisualizationOptions& options);

/// Writes vis_00000.ppm, ... into `directory` and returns the paths.
std::vector<std::filesystem::path> export_visualization(const VideoClip& clip, const std::filesystem::path& directory,
                                                         const VisualizationOptions& options = {});

}  // namespace bq
