#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "aerialdet/image_io.hpp"
#include "aerialdet/rng.hpp"

using namespace aerialdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("aerialdet_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GrayFrame random_frame(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  GrayFrame f(w, h);
  for (float& v : f.data) v = static_cast<float>(rng.uniform());
  return f;
}

// Written files carry 8-bit samples, so a round trip reproduces the
// quantized value, not the float.
float quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
}

}  // namespace

TEST_CASE("pgm round trip matches 8-bit quantization", "[imageio]") {
  const fs::path dir = temp_dir("pgm");
  const GrayFrame f = random_frame(17, 9, 1);
  write_pgm(dir / "a.pgm", f);
  const GrayFrame back = read_pgm(dir / "a.pgm");
  REQUIRE(back.width == 17);
  REQUIRE(back.height == 9);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    CHECK(back.data[i] == Catch::Approx(quantize8(f.data[i])).margin(1e-6));
  }
}

TEST_CASE("png gray round trip matches 8-bit quantization", "[imageio]") {
  const fs::path dir = temp_dir("pnggray");
  const GrayFrame f = random_frame(23, 11, 2);
  write_png_gray(dir / "a.png", f);
  const GrayFrame back = read_frame(dir / "a.png");
  REQUIRE(back.width == 23);
  REQUIRE(back.height == 11);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    CHECK(back.data[i] == Catch::Approx(quantize8(f.data[i])).margin(1e-6));
  }
}

TEST_CASE("png rgb round trip preserves channels", "[imageio]") {
  const fs::path dir = temp_dir("pngrgb");
  RgbImage img(5, 4);
  Rng rng(3);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  write_png_rgb(dir / "c.png", img);
  const RgbImage back = read_png_rgb(dir / "c.png");
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(back.data[i] == Catch::Approx(quantize8(img.data[i])).margin(1e-6));
  }
}

TEST_CASE("read_frame dispatches on extension", "[imageio]") {
  const fs::path dir = temp_dir("dispatch");
  const GrayFrame f = random_frame(6, 6, 4);
  write_pgm(dir / "x.pgm", f);
  write_png_gray(dir / "x.png", f);
  CHECK(read_frame(dir / "x.pgm").width == 6);
  CHECK(read_frame(dir / "x.png").width == 6);
  CHECK_THROWS_AS(read_frame(dir / "x.bmp"), FormatError);
}

TEST_CASE("list_frames returns a sorted, filtered listing", "[imageio]") {
  const fs::path dir = temp_dir("list");
  const GrayFrame f = random_frame(4, 4, 5);
  write_png_gray(dir / "frame_000002.png", f);
  write_png_gray(dir / "frame_000000.png", f);
  write_pgm(dir / "frame_000001.pgm", f);
  std::ofstream(dir / "notes.txt") << "ignored";
  const std::vector<fs::path> files = list_frames(dir);
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "frame_000000.png");
  CHECK(files[1].filename() == "frame_000001.pgm");
  CHECK(files[2].filename() == "frame_000002.png");
}

TEST_CASE("missing and malformed files raise typed errors", "[imageio]") {
  const fs::path dir = temp_dir("bad");
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), IoError);
  CHECK_THROWS_AS(read_png_rgb(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.pgm") << "P6 this is not a pgm";
  CHECK_THROWS_AS(read_pgm(dir / "junk.pgm"), FormatError);
  std::ofstream(dir / "junk.png") << "definitely not a png";
  CHECK_THROWS_AS(read_png_rgb(dir / "junk.png"), FormatError);
}

TEST_CASE("truncated pgm payload is rejected", "[imageio]") {
  const fs::path dir = temp_dir("trunc");
  std::ofstream(dir / "t.pgm") << "P5\n4 4\n255\nab";  // 16 bytes promised, 2 given
  CHECK_THROWS_AS(read_pgm(dir / "t.pgm"), FormatError);
}

TEST_CASE("pgm comments are skipped", "[imageio]") {
  const fs::path dir = temp_dir("comment");
  std::ofstream out(dir / "c.pgm", std::ios::binary);
  out << "P5\n# a comment line\n2 1\n# another\n255\n";
  out.put(static_cast<char>(0));
  out.put(static_cast<char>(255));
  out.close();
  const GrayFrame f = read_pgm(dir / "c.pgm");
  REQUIRE(f.width == 2);
  CHECK(f.at(0, 0) == 0.0f);
  CHECK(f.at(1, 0) == 1.0f);
}
