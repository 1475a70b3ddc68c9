#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bq/error.hpp"
#include "bq/io.hpp"
#include "bq/synthetic.hpp"

namespace fs = std::filesystem;

namespace bq {
namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bq_io_test_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

Image8 gradient_image(std::size_t w, std::size_t h, std::size_t channels, std::uint8_t offset) {
  Image8 img{w, h, channels, std::vector<std::uint8_t>(w * h * channels)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>((i * 7 + offset) % 256);
  return img;
}

TEST_F(IoTest, LoadsPpmSequence) {
  for (std::size_t t = 0; t < 24; ++t) {
    write_pnm(dir_ / ("frame_" + std::to_string(100 + t) + ".ppm"), gradient_image(64, 64, 3, t));
  }
  const auto clip = load_frames(FrameSequenceSource{dir_});
  EXPECT_EQ(clip.shape(), (Shape{24, 3, 64, 64}));
  // Sample 0 of frame 5 is offset 5.
  EXPECT_DOUBLE_EQ(clip.at(5, 0, 0, 0), 5.0 / 255.0);
  EXPECT_DOUBLE_EQ(clip.at(5, 1, 0, 0), 12.0 / 255.0);
}

TEST_F(IoTest, FullWhiteIsOne) {
  Image8 white{4, 3, 3, std::vector<std::uint8_t>(36, 255)};
  for (int t = 0; t < 3; ++t) write_pnm(dir_ / ("f" + std::to_string(t) + ".ppm"), white);
  const auto clip = load_frames(FrameSequenceSource{dir_});
  for (real v : clip.data()) EXPECT_EQ(v, 1.0);
}

TEST_F(IoTest, LexicographicOrderAndPattern) {
  write_pnm(dir_ / "b.ppm", gradient_image(2, 2, 3, 2));
  write_pnm(dir_ / "a.ppm", gradient_image(2, 2, 3, 1));
  write_pnm(dir_ / "c.ppm", gradient_image(2, 2, 3, 3));
  write_pnm(dir_ / "skip_a.ppm", gradient_image(2, 2, 3, 9));
  write_pnm(dir_ / "skip_b.ppm", gradient_image(2, 2, 3, 9));
  write_pnm(dir_ / "skip_c.ppm", gradient_image(2, 2, 3, 9));
  std::ofstream(dir_ / "notes.txt") << "ignored";
  auto clip = load_frames(FrameSequenceSource{dir_});
  EXPECT_EQ(clip.frames(), 6u);
  EXPECT_DOUBLE_EQ(clip.at(0, 0, 0, 0), 1.0 / 255.0);
  EXPECT_DOUBLE_EQ(clip.at(1, 0, 0, 0), 2.0 / 255.0);
  clip = load_frames(FrameSequenceSource{dir_, "skip"});
  EXPECT_EQ(clip.frames(), 3u);
  EXPECT_DOUBLE_EQ(clip.at(2, 0, 0, 0), 9.0 / 255.0);
}

TEST_F(IoTest, GrayFramesAreReplicated) {
  for (int t = 0; t < 3; ++t) write_pnm(dir_ / ("g" + std::to_string(t) + ".pgm"), gradient_image(5, 4, 1, 3));
  const auto clip = load_frames(FrameSequenceSource{dir_});
  EXPECT_EQ(clip.shape(), (Shape{3, 3, 4, 5}));
  EXPECT_EQ(clip.at(0, 0, 1, 2), clip.at(0, 2, 1, 2));
}

TEST_F(IoTest, IngestionErrors) {
  EXPECT_THROW(load_frames(FrameSequenceSource{dir_}), IngestionError);
  EXPECT_THROW(load_frames(FrameSequenceSource{dir_ / "missing"}), Error);
  write_pnm(dir_ / "a.ppm", gradient_image(4, 4, 3, 0));
  write_pnm(dir_ / "b.ppm", gradient_image(4, 4, 3, 0));
  EXPECT_THROW(load_frames(FrameSequenceSource{dir_}), IngestionError);
  write_pnm(dir_ / "c.ppm", gradient_image(5, 4, 3, 0));
  EXPECT_THROW(load_frames(FrameSequenceSource{dir_}), IngestionError);
}

TEST_F(IoTest, MalformedPnmIsFormatError) {
  std::ofstream(dir_ / "bad.ppm") << "P3\n2 2\n255\n0 0 0";
  EXPECT_THROW(read_pnm(dir_ / "bad.ppm"), FormatError);
  std::ofstream(dir_ / "short.ppm", std::ios::binary) << "P6\n4 4\n255\n" << std::string(10, 'x');
  EXPECT_THROW(read_pnm(dir_ / "short.ppm"), FormatError);
  EXPECT_THROW(read_pnm(dir_ / "nope.ppm"), IoError);
}

TEST_F(IoTest, PnmRoundTrip) {
  for (std::size_t channels : {1u, 3u}) {
    const auto img = gradient_image(7, 5, channels, 11);
    const auto path = dir_ / (channels == 1 ? "x.pgm" : "x.ppm");
    write_pnm(path, img);
    const auto back = read_pnm(path);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.channels, channels);
    EXPECT_EQ(back.pixels, img.pixels);
  }
}

TEST_F(IoTest, PngRoundTripAndSequence) {
  for (std::size_t t = 0; t < 3; ++t) write_png(dir_ / ("f" + std::to_string(t) + ".png"), gradient_image(9, 6, 3, t));
  const auto back = read_png(dir_ / "f1.png");
  EXPECT_EQ(back.pixels, gradient_image(9, 6, 3, 1).pixels);
  const auto clip = load_frames(FrameSequenceSource{dir_, "", FrameFormat::png});
  EXPECT_EQ(clip.shape(), (Shape{3, 3, 6, 9}));
  std::ofstream(dir_ / "junk.png") << "not a png";
  EXPECT_THROW(read_png(dir_ / "junk.png"), FormatError);
}

TEST_F(IoTest, SaveFramesThenLoad) {
  const auto clip = synthetic::random_clip(Shape{3, 3, 6, 5}, 1);
  save_frames(clip, dir_ / "out");
  const auto back = load_frames(FrameSequenceSource{dir_ / "out"});
  EXPECT_EQ(back.shape(), clip.shape());
  EXPECT_LE(max_abs_diff(back, clip), 0.5 / 255.0 + 1e-12);
}

TEST_F(IoTest, RawRoundTrip) {
  const auto clip = synthetic::random_clip(Shape{3, 2, 5, 4}, 2, -300, 300);
  save_raw(clip, dir_ / "a.bqc", RawDtype::real64);
  EXPECT_EQ(load_raw(dir_ / "a.bqc"), clip);
  EXPECT_EQ(fs::file_size(dir_ / "a.bqc"), 24u + clip.size() * 8);

  std::vector<real> floats(clip.size());
  for (std::size_t i = 0; i < floats.size(); ++i) floats[i] = static_cast<float>(clip.data()[i]);
  const VideoClip exact(clip.shape(), floats);
  save_raw(exact, dir_ / "b.bqc");
  EXPECT_EQ(load_raw(dir_ / "b.bqc"), exact);
  EXPECT_EQ(fs::file_size(dir_ / "b.bqc"), 24u + clip.size() * 4);
  EXPECT_LE(max_abs_diff(decode_raw(encode_raw(clip)), clip), 1e-4);
}

TEST_F(IoTest, RawHeaderLayout) {
  const auto bytes = encode_raw(VideoClip(Shape{1, 2, 3, 4}), RawDtype::real64);
  ASSERT_EQ(bytes.size(), 24u + 24u * 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BQC1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(bytes[16], 3);
  EXPECT_EQ(bytes[20], 4);
}

TEST_F(IoTest, RawErrors) {
  auto bytes = encode_raw(synthetic::random_clip(Shape{2, 1, 3, 3}, 3));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 1);
  EXPECT_THROW(decode_raw(truncated), FormatError);
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(decode_raw(longer), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_raw(magic), FormatError);
  auto dims = bytes;
  dims[8] = 0;
  EXPECT_THROW(decode_raw(dims), FormatError);
  auto dtype = bytes;
  dtype[4] = 7;
  EXPECT_THROW(decode_raw(dtype), FormatError);
  EXPECT_THROW(decode_raw(std::vector<std::uint8_t>(10)), FormatError);
  auto nan = bytes;
  for (std::size_t i = 24; i < 28; ++i) nan[i] = 0xff;
  EXPECT_THROW(decode_raw(nan), FormatError);
  EXPECT_THROW(load_raw(dir_ / "missing.bqc"), IoError);
}

TEST_F(IoTest, VisualizationOfZeroClipIsMidGray) {
  const VideoClip clip(Shape{2, 3, 4, 4});
  for (auto mode : {VisualizationMode::per_frame_minmax, VisualizationMode::global_minmax}) {
    for (bool anchored : {true, false}) {
      const auto img = render_frame(clip, 1, VisualizationOptions{mode, anchored});
      for (auto p : img.pixels) EXPECT_EQ(p, 128);
    }
  }
}

TEST_F(IoTest, VisualizationAnchorsZero) {
  VideoClip clip(Shape{1, 1, 1, 3}, {-2.0, 0.0, 1.0});
  const auto anchored = render_frame(clip, 0, VisualizationOptions{VisualizationMode::per_frame_minmax, true});
  EXPECT_EQ(anchored.channels, 1u);
  EXPECT_EQ(anchored.pixels[0], 0);
  EXPECT_EQ(anchored.pixels[1], 128);
  EXPECT_EQ(anchored.pixels[2], 191);
  const auto plain = render_frame(clip, 0, VisualizationOptions{VisualizationMode::per_frame_minmax, false});
  EXPECT_EQ(plain.pixels[0], 0);
  EXPECT_EQ(plain.pixels[2], 255);
}

TEST_F(IoTest, GlobalVersusPerFrameScaling) {
  VideoClip clip(Shape{2, 1, 1, 2}, {0.0, 1.0, 0.0, 4.0});
  const VisualizationOptions per{VisualizationMode::per_frame_minmax, false};
  const VisualizationOptions global{VisualizationMode::global_minmax, false};
  EXPECT_EQ(render_frame(clip, 0, per).pixels[1], 255);
  EXPECT_LT(render_frame(clip, 0, global).pixels[1], 70);
  EXPECT_EQ(render_frame(clip, 1, global).pixels[1], 255);
}

TEST_F(IoTest, MovingSquareVisualization) {
  const Shape s{3, 3, 16, 16};
  const auto clip = synthetic::moving_square(s, synthetic::SquareMotion{4, 2, 6, 3});
  const auto paths = export_visualization(clip, dir_ / "vis", VisualizationOptions{VisualizationMode::global_minmax, false});
  ASSERT_EQ(paths.size(), 3u);
  const auto img = read_pnm(paths[1]);
  EXPECT_EQ(img.channels, 3u);
  // Frame 1: square columns [5, 9), rows [6, 10).
  EXPECT_EQ(img.pixels[(7 * 16 + 6) * 3], 255);
  EXPECT_EQ(img.pixels[(7 * 16 + 2) * 3], 0);
  EXPECT_THROW(render_frame(clip, 3, {}), DimensionError);
}

}  // namespace
}  // namespace bq
