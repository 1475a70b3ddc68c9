#include "bq/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include <png.h>

#include "bq/error.hpp"

namespace bq {

namespace fs = std::filesystem;

namespace {

struct DecodedImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<real> values;  // interleaved, scaled to [0, 1]
};

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Header token reader for binary PNM, skipping whitespace and '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::vector<std::uint8_t>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) throw FormatError(path_.string() + ": truncated PNM header");
    return out;
  }

  std::size_t number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      throw FormatError(path_.string() + ": bad PNM header field '" + t + "'");
    }
    return std::stoul(t);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

DecodedImage decode_pnm(const fs::path& path) {
  const auto bytes = read_file(path);
  PnmHeader header(bytes, path);
  const std::string magic = header.token();
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw FormatError(path.string() + ": unsupported PNM type '" + magic + "' (need P5 or P6)");
  }
  DecodedImage img;
  img.width = header.number();
  img.height = header.number();
  img.channels = channels;
  const std::size_t maxval = header.number();
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    throw FormatError(path.string() + ": bad PNM dimensions or maxval");
  }
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = img.width * img.height * channels;
  const std::size_t offset = header.raster_offset();
  if (offset + count * sample_bytes > bytes.size()) throw FormatError(path.string() + ": truncated PNM raster");
  img.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t v = bytes[offset + i * sample_bytes];
    if (sample_bytes == 2) v = (v << 8) | bytes[offset + i * 2 + 1];
    img.values[i] = static_cast<real>(v) / static_cast<real>(maxval);
  }
  return img;
}

DecodedImage decode_png(const fs::path& path) {
  const Image8 raw = read_png(path);
  DecodedImage img{raw.width, raw.height, raw.channels, std::vector<real>(raw.pixels.size())};
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) img.values[i] = raw.pixels[i] / 255.0;
  return img;
}

bool has_frame_extension(const fs::path& path, FrameFormat format) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (format == FrameFormat::png) return ext == ".png";
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::uint8_t to_byte(real unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit, real{0}, real{1}) * 255.0));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

constexpr char kMagic[4] = {'B', 'Q', 'C', '1'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 4;

}  // namespace

// ---------------------------------------------------------------------------
// Images

Image8 read_pnm(const fs::path& path) {
  const DecodedImage img = decode_pnm(path);
  Image8 out{img.width, img.height, img.channels, std::vector<std::uint8_t>(img.values.size())};
  for (std::size_t i = 0; i < img.values.size(); ++i) out.pixels[i] = to_byte(img.values[i]);
  return out;
}

std::vector<real> read_pnm_scaled(const fs::path& path, std::size_t& width, std::size_t& height,
                                  std::size_t& channels) {
  DecodedImage img = decode_pnm(path);
  width = img.width;
  height = img.height;
  channels = img.channels;
  return std::move(img.values);
}

void write_pnm(const fs::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw ConfigError("PNM output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (image.channels == 3 ? "P6" : "P5") << "\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Image8 read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!fs::is_regular_file(path)) throw IoError("cannot open " + path.string());
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out{image.width, image.height, gray ? 1u : 3u, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": " + msg);
  }
  return out;
}

void write_png(const fs::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw ConfigError("PNG output needs 1 or 3 channels");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + png.message);
  }
}

VideoClip load_frames(const FrameSequenceSource& source) {
  if (!fs::is_directory(source.directory)) throw IoError("not a directory: " + source.directory.string());
  if (source.channels != 1 && source.channels != 3) throw ConfigError("expected channels must be 1 or 3");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(source.directory)) {
    if (!entry.is_regular_file() || !has_frame_extension(entry.path(), source.format)) continue;
    if (!source.pattern.empty() && entry.path().filename().string().find(source.pattern) == std::string::npos) {
      continue;
    }
    files.push_back(entry.path());
  }
  if (files.empty()) throw IngestionError("no frames found in " + source.directory.string());
  if (files.size() < 3) {
    throw IngestionError("need at least 3 frames, found " + std::to_string(files.size()) + " in " +
                         source.directory.string());
  }
  std::ranges::sort(files, [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<real> data;
  std::size_t width = 0;
  std::size_t height = 0;
  for (const auto& file : files) {
    const DecodedImage img = source.format == FrameFormat::png ? decode_png(file) : decode_pnm(file);
    if (width == 0) {
      width = img.width;
      height = img.height;
      data.reserve(files.size() * source.channels * width * height);
    } else if (img.width != width || img.height != height) {
      throw IngestionError("frame " + file.filename().string() + " is " + std::to_string(img.width) + "x" +
                           std::to_string(img.height) + ", expected " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
    if (img.channels != source.channels && !(img.channels == 1 && source.channels == 3)) {
      throw IngestionError("frame " + file.filename().string() + " has " + std::to_string(img.channels) +
                           " channels, expected " + std::to_string(source.channels));
    }
    // Interleaved -> planar, replicating grayscale when needed.
    for (std::size_t c = 0; c < source.channels; ++c) {
      const std::size_t src_c = img.channels == 1 ? 0 : c;
      for (std::size_t p = 0; p < width * height; ++p) data.push_back(img.values[p * img.channels + src_c]);
    }
  }
  return VideoClip(Shape{files.size(), source.channels, height, width}, std::move(data));
}

void save_frames(const VideoClip& clip, const fs::path& directory) {
  fs::create_directories(directory);
  const std::size_t channels = clip.channels() == 3 ? 3 : 1;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    Image8 img{clip.width(), clip.height(), channels, std::vector<std::uint8_t>(clip.height() * clip.width() * channels)};
    for (std::size_t p = 0; p < clip.height() * clip.width(); ++p) {
      for (std::size_t c = 0; c < channels; ++c) img.pixels[p * channels + c] = to_byte(clip.plane(t, c)[p]);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.%s", t, channels == 3 ? "ppm" : "pgm");
    write_pnm(directory / name, img);
  }
}

// ---------------------------------------------------------------------------
// BQC1

std::vector<std::uint8_t> encode_raw(const VideoClip& clip, RawDtype dtype) {
  const Shape& s = clip.shape();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + clip.size() * (dtype == RawDtype::real32 ? 4 : 8));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(dtype));
  for (std::size_t extent : {s.t, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(extent));
  for (real v : clip.data()) {
    if (dtype == RawDtype::real32) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

VideoClip decode_raw(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("BQC1: file shorter than its header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) throw FormatError("BQC1: bad magic");
  const std::uint32_t code = get_u32(bytes, 4);
  if (code != static_cast<std::uint32_t>(RawDtype::real32) && code != static_cast<std::uint32_t>(RawDtype::real64)) {
    throw FormatError("BQC1: unknown dtype code " + std::to_string(code));
  }
  const Shape s{get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16), get_u32(bytes, 20)};
  if (s.t == 0 || s.c == 0 || s.h == 0 || s.w == 0) throw FormatError("BQC1: zero extent in header");
  const std::size_t width = code == static_cast<std::uint32_t>(RawDtype::real32) ? 4 : 8;
  const std::size_t numel = s.numel();
  if (numel / s.t / s.c / s.h != s.w || (bytes.size() - kHeaderBytes) / width < numel) {
    throw FormatError("BQC1: payload shorter than header " + to_string(s) + " requires");
  }
  if (bytes.size() - kHeaderBytes != numel * width) {
    throw FormatError("BQC1: payload length does not match header " + to_string(s));
  }
  std::vector<real> data(numel);
  for (std::size_t i = 0; i < numel; ++i) {
    const std::size_t at = kHeaderBytes + i * width;
    data[i] = width == 4 ? static_cast<real>(std::bit_cast<float>(get_u32(bytes, at)))
                         : std::bit_cast<double>(get_u64(bytes, at));
  }
  try {
    return VideoClip(s, std::move(data));
  } catch (const ValidationError& e) {
    throw FormatError(std::string("BQC1: ") + e.what());
  }
}

void save_raw(const VideoClip& clip, const fs::path& path, RawDtype dtype) {
  const auto bytes = encode_raw(clip, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

VideoClip load_raw(const fs::path& path) { return decode_raw(read_file(path)); }

// ---------------------------------------------------------------------------
// Visualization

namespace {

struct Range {
  real lo = 0;
  real hi = 0;
};

std::size_t rendered_channels(const VideoClip& clip) { return clip.channels() == 3 ? 3 : 1; }

Range frame_range(const VideoClip& clip, std::size_t t) {
  Range r{clip.plane(t, 0)[0], clip.plane(t, 0)[0]};
  for (std::size_t c = 0; c < rendered_channels(clip); ++c) {
    for (real v : clip.plane(t, c)) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  return r;
}

Image8 render_with_range(const VideoClip& clip, std::size_t t, Range range, bool zero_anchored) {
  const std::size_t channels = rendered_channels(clip);
  const std::size_t plane = clip.height() * clip.width();
  Image8 img{clip.width(), clip.height(), channels, std::vector<std::uint8_t>(plane * channels)};
  const real magnitude = std::max(std::abs(range.lo), std::abs(range.hi));
  for (std::size_t c = 0; c < channels; ++c) {
    const auto src = clip.plane(t, c);
    for (std::size_t p = 0; p < plane; ++p) {
      real level = 128;
      if (zero_anchored) {
        if (magnitude > 0 && range.hi > range.lo) level = 127.5 + 127.5 * src[p] / magnitude;
      } else if (range.hi > range.lo) {
        level = (src[p] - range.lo) / (range.hi - range.lo) * 255.0;
      }
      img.pixels[p * channels + c] = static_cast<std::uint8_t>(std::clamp(std::lround(level), 0L, 255L));
    }
  }
  return img;
}

}  // namespace

Image8 render_frame(const VideoClip& clip, std::size_t t, const VisualizationOptions& options) {
  if (t >= clip.frames()) throw DimensionError("frame index out of range");
  Range range = frame_range(clip, t);
  if (options.mode == VisualizationMode::global_minmax) {
    for (std::size_t u = 0; u < clip.frames(); ++u) {
      const Range r = frame_range(clip, u);
      range.lo = std::min(range.lo, r.lo);
      range.hi = std::max(range.hi, r.hi);
    }
  }
  return render_with_range(clip, t, range, options.zero_anchored);
}

std::vector<fs::path> export_visualization(const VideoClip& clip, const fs::path& directory,
                                           const VisualizationOptions& options) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  std::vector<fs::path> written;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    const Image8 img = render_frame(clip, t, options);
    char name[32];
    std::snprintf(name, sizeof(name), "vis_%05zu.%s", t, img.channels == 3 ? "ppm" : "pgm");
    write_pnm(directory / name, img);
    written.push_back(directory / name);
  }
  return written;
}

}  // namespace bq
