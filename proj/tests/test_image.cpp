#include <catch2/catch_amalgamated.hpp>

#include "aerialdet/image.hpp"
#include "aerialdet/rng.hpp"

using namespace aerialdet;

TEST_CASE("grayscale conversion uses the luma weights", "[image]") {
  RgbImage rgb(3, 1);
  rgb.at(0, 0, 0) = 1.0f;  // pure red
  rgb.at(1, 0, 1) = 1.0f;  // pure green
  rgb.at(2, 0, 2) = 1.0f;  // pure blue
  const GrayFrame g = to_grayscale(rgb);
  CHECK(g.at(0, 0) == Catch::Approx(0.299).margin(1e-6));
  CHECK(g.at(1, 0) == Catch::Approx(0.587).margin(1e-6));
  CHECK(g.at(2, 0) == Catch::Approx(0.114).margin(1e-6));
}

TEST_CASE("grayscale clamps out-of-range channels", "[image]") {
  RgbImage rgb(1, 1);
  rgb.at(0, 0, 0) = 2.0f;
  rgb.at(0, 0, 1) = 2.0f;
  rgb.at(0, 0, 2) = 2.0f;
  CHECK(to_grayscale(rgb).at(0, 0) == 1.0f);
}

TEST_CASE("bilinear resize preserves constants and averages a 2x2 block", "[image]") {
  GrayFrame flat(7, 5, 0.4f);
  const GrayFrame r = resize_bilinear(flat, 13, 3);
  for (float v : r.data) CHECK(v == Catch::Approx(0.4).margin(1e-6));

  GrayFrame quad(2, 2);
  quad.at(0, 0) = 0.0f;
  quad.at(1, 0) = 1.0f;
  quad.at(0, 1) = 0.5f;
  quad.at(1, 1) = 0.5f;
  const GrayFrame one = resize_bilinear(quad, 1, 1);
  CHECK(one.at(0, 0) == Catch::Approx(0.5).margin(1e-6));  // mean of the four corners
}

TEST_CASE("bilinear resize identity when sizes match", "[image]") {
  Rng rng(7);
  GrayFrame img(9, 6);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  const GrayFrame same = resize_bilinear(img, 9, 6);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(same.data[i] == Catch::Approx(img.data[i]).margin(1e-6));
  }
}

TEST_CASE("resize output stays within the source range", "[image]") {
  Rng rng(11);
  GrayFrame img(16, 12);
  float lo = 1.0f, hi = 0.0f;
  for (float& v : img.data) {
    v = static_cast<float>(rng.uniform());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const GrayFrame up = resize_bilinear(img, 37, 23);
  for (float v : up.data) {
    CHECK(v >= lo - 1e-6f);
    CHECK(v <= hi + 1e-6f);
  }
}

TEST_CASE("closing fills a small hole inside a blob", "[image]") {
  BinaryMask m(11, 11);
  for (int y = 2; y < 9; ++y) {
    for (int x = 2; x < 9; ++x) m.set(x, y, true);
  }
  m.set(5, 5, false);  // pinhole
  const BinaryMask closed = morphological_close(m, {1});
  CHECK(closed.test(5, 5));
  CHECK(closed.count_true() >= m.count_true());
}

TEST_CASE("closing is idempotent", "[image]") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    Rng rng(seed);
    BinaryMask m(24, 18);
    for (int y = 0; y < 18; ++y) {
      for (int x = 0; x < 24; ++x) m.set(x, y, rng.uniform() < 0.35);
    }
    const BinaryMask once = morphological_close(m, {2});
    const BinaryMask twice = morphological_close(once, {2});
    CHECK(once == twice);
  }
}

TEST_CASE("closing with radius zero is the identity", "[image]") {
  Rng rng(5);
  BinaryMask m(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) m.set(x, y, rng.uniform() < 0.5);
  }
  CHECK(morphological_close(m, {0}) == m);
}

TEST_CASE("closing never erases an isolated blob entirely", "[image]") {
  BinaryMask m(15, 15);
  m.set(7, 7, true);
  const BinaryMask closed = morphological_close(m, {2});
  CHECK(closed.test(7, 7));
}

TEST_CASE("connected components finds separated blobs with tight boxes", "[image]") {
  BinaryMask m(12, 8);
  // 2x2 blob at (1,1), L-shaped blob near (6,3)
  m.set(1, 1, true);
  m.set(2, 1, true);
  m.set(1, 2, true);
  m.set(2, 2, true);
  m.set(6, 3, true);
  m.set(6, 4, true);
  m.set(6, 5, true);
  m.set(7, 5, true);
  const std::vector<Blob> blobs = connected_components(m, 1);
  REQUIRE(blobs.size() == 2);
  CHECK(blobs[0].box == BoundingBox{1, 1, 2, 2});
  CHECK(blobs[0].pixel_count == 4);
  CHECK(blobs[1].box == BoundingBox{6, 3, 2, 3});
  CHECK(blobs[1].pixel_count == 4);
}

TEST_CASE("diagonal pixels join under 8-connectivity", "[image]") {
  BinaryMask m(4, 4);
  m.set(0, 0, true);
  m.set(1, 1, true);
  m.set(2, 2, true);
  const std::vector<Blob> blobs = connected_components(m, 1);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].pixel_count == 3);
  CHECK(blobs[0].box == BoundingBox{0, 0, 3, 3});
}

TEST_CASE("min_area filters small blobs", "[image]") {
  BinaryMask m(10, 4);
  m.set(0, 0, true);  // area 1
  for (int x = 4; x < 8; ++x) {
    m.set(x, 2, true);
    m.set(x, 3, true);
  }  // area 8
  CHECK(connected_components(m, 1).size() == 2);
  const std::vector<Blob> big = connected_components(m, 2);
  REQUIRE(big.size() == 1);
  CHECK(big[0].pixel_count == 8);
}

TEST_CASE("components are sorted by box position", "[image]") {
  BinaryMask m(10, 10);
  m.set(8, 8, true);
  m.set(1, 1, true);
  m.set(5, 1, true);
  const std::vector<Blob> blobs = connected_components(m, 1);
  REQUIRE(blobs.size() == 3);
  CHECK(blobs[0].box.x == 1);
  CHECK(blobs[1].box.x == 5);
  CHECK(blobs[2].box.x == 8);
}

TEST_CASE("iou handles identity, disjoint, and partial overlap", "[image]") {
  const BoundingBox a{0, 0, 4, 4};
  CHECK(iou(a, a) == Catch::Approx(1.0));
  CHECK(iou(a, {10, 10, 4, 4}) == 0.0);
  // overlap 2x2=4, union 16+16-4=28
  CHECK(iou(a, {2, 2, 4, 4}) == Catch::Approx(4.0 / 28.0));
  CHECK(iou(a, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("iou is symmetric", "[image]") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const BoundingBox a{static_cast<int>(rng.uniform_index(20)),
                        static_cast<int>(rng.uniform_index(20)),
                        1 + static_cast<int>(rng.uniform_index(10)),
                        1 + static_cast<int>(rng.uniform_index(10))};
    const BoundingBox b{static_cast<int>(rng.uniform_index(20)),
                        static_cast<int>(rng.uniform_index(20)),
                        1 + static_cast<int>(rng.uniform_index(10)),
                        1 + static_cast<int>(rng.uniform_index(10))};
    CHECK(iou(a, b) == Catch::Approx(iou(b, a)));
  }
}

TEST_CASE("clamp_box trims to frame bounds", "[image]") {
  CHECK(clamp_box({-3, -2, 10, 10}, 8, 8) == BoundingBox{0, 0, 7, 8});
  CHECK(clamp_box({5, 5, 10, 10}, 8, 8) == BoundingBox{5, 5, 3, 3});
  CHECK(clamp_box({2, 2, 3, 3}, 8, 8) == BoundingBox{2, 2, 3, 3});
  CHECK(clamp_box({20, 20, 5, 5}, 8, 8).area() == 0);
}

TEST_CASE("constructors reject degenerate dimensions", "[image]") {
  CHECK_THROWS_AS(GrayFrame(0, 4), DimensionError);
  CHECK_THROWS_AS(RgbImage(3, 0), DimensionError);
  CHECK_THROWS_AS(resize_bilinear(GrayFrame(2, 2), 0, 5), DimensionError);
}
