#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "aerialdet/errors.hpp"

namespace aerialdet {

// Grayscale frame, row-major intensities in [0, 1].
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayFrame() = default;
  GrayFrame(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 1 || h < 1) throw DimensionError("GrayFrame: dimensions must be >= 1");
  }

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool same_size(const GrayFrame& o) const { return width == o.width && height == o.height; }
};

// Interleaved RGB image, channels in [0, 1].
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // r,g,b per pixel

  RgbImage() = default;
  RgbImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {
    if (w < 1 || h < 1) throw DimensionError("RgbImage: dimensions must be >= 1");
  }

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {
    if (w < 1 || h < 1) throw DimensionError("BinaryMask: dimensions must be >= 1");
  }

  bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count_true() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  bool operator==(const BinaryMask& o) const {
    return width == o.width && height == o.height && bits == o.bits;
  }
};

// Axis-aligned box, top-left corner (x, y), extent (w, h) in pixels.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  bool operator==(const BoundingBox& o) const {
    return x == o.x && y == o.y && w == o.w && h == o.h;
  }
};

// Intersection of a box with the frame rectangle; result may be empty (w or h 0).
inline BoundingBox clamp_box(const BoundingBox& b, int frame_w, int frame_h) {
  const int x0 = std::clamp(b.x, 0, frame_w);
  const int y0 = std::clamp(b.y, 0, frame_h);
  const int x1 = std::clamp(b.x + b.w, 0, frame_w);
  const int y1 = std::clamp(b.y + b.h, 0, frame_h);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

struct Blob {
  long long pixel_count = 0;
  BoundingBox box;
  int label_id = 0;
};

// Square structuring element of side 2*radius+1.
struct StructuringElement {
  int radius = 2;
};

inline GrayFrame to_grayscale(const RgbImage& rgb) {
  if (rgb.width < 1 || rgb.height < 1 ||
      rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3) {
    throw DimensionError("to_grayscale: channel data does not match dimensions");
  }
  GrayFrame out(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      const double v = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) + 0.114 * rgb.at(x, y, 2);
      out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

// Bilinear resize with half-pixel-center alignment. Each output value is
// clamped to the range of its four source corners, so interpolation never
// escapes the input range.
inline GrayFrame resize_bilinear(const GrayFrame& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw DimensionError("resize_bilinear: target dimensions must be >= 1");
  if (img.width < 1 || img.height < 1) throw DimensionError("resize_bilinear: empty source");
  GrayFrame out(out_w, out_h);
  const double sx_scale = static_cast<double>(img.width) / out_w;
  const double sy_scale = static_cast<double>(img.height) / out_h;
  for (int yo = 0; yo < out_h; ++yo) {
    double sy = (yo + 0.5) * sy_scale - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int xo = 0; xo < out_w; ++xo) {
      double sx = (xo + 0.5) * sx_scale - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      const double v00 = img.at(x0, y0), v10 = img.at(x1, y0);
      const double v01 = img.at(x0, y1), v11 = img.at(x1, y1);
      double v = v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy) + v01 * (1 - fx) * fy +
                 v11 * fx * fy;
      const double lo = std::min(std::min(v00, v10), std::min(v01, v11));
      const double hi = std::max(std::max(v00, v10), std::max(v01, v11));
      out.at(xo, yo) = static_cast<float>(std::clamp(v, lo, hi));
    }
  }
  return out;
}

namespace detail {

// Dilation into a buffer padded by r on every side. Padding keeps the
// subsequent erosion exact near the frame border (out-of-bounds is
// background throughout), which is what makes closing idempotent.
inline std::vector<std::uint8_t> dilate_padded(const BinaryMask& m, int r, int& pw, int& ph) {
  pw = m.width + 2 * r;
  ph = m.height + 2 * r;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(pw) * ph, 0);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      bool hit = false;
      for (int dy = -r; dy <= r && !hit; ++dy) {
        const int sy = y - r + dy;
        if (sy < 0 || sy >= m.height) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = x - r + dx;
          if (sx < 0 || sx >= m.width) continue;
          if (m.test(sx, sy)) {
            hit = true;
            break;
          }
        }
      }
      out[static_cast<std::size_t>(y) * pw + x] = hit ? 1 : 0;
    }
  }
  return out;
}

}  // namespace detail

// Closing: dilation followed by erosion with the same square element.
inline BinaryMask morphological_close(const BinaryMask& mask, StructuringElement se) {
  if (se.radius < 0) throw ConfigError("morphological_close: radius must be >= 0");
  if (se.radius == 0) return mask;
  const int r = se.radius;
  int pw = 0, ph = 0;
  const std::vector<std::uint8_t> dil = detail::dilate_padded(mask, r, pw, ph);
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y + r + dy) * pw;
        for (int dx = -r; dx <= r; ++dx) {
          if (!dil[row + (x + r + dx)]) {
            all = false;
            break;
          }
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

// 8-connected components; components smaller than min_area are dropped and
// the survivors are ordered by (box.y, box.x). label_id is the raster-scan
// discovery index.
inline std::vector<Blob> connected_components(const BinaryMask& mask, long long min_area) {
  if (min_area < 1) throw ConfigError("connected_components: min_area must be >= 1");
  std::vector<int> label(mask.bits.size(), -1);
  std::vector<Blob> blobs;
  int next_label = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y0 = 0; y0 < mask.height; ++y0) {
    for (int x0 = 0; x0 < mask.width; ++x0) {
      const std::size_t idx0 = static_cast<std::size_t>(y0) * mask.width + x0;
      if (!mask.bits[idx0] || label[idx0] >= 0) continue;
      Blob blob;
      blob.label_id = next_label++;
      blob.box = {x0, y0, 1, 1};
      int min_x = x0, max_x = x0, min_y = y0, max_y = y0;
      label[idx0] = blob.label_id;
      queue.emplace_back(x0, y0);
      while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        ++blob.pixel_count;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= mask.width || ny < 0 || ny >= mask.height) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
            if (!mask.bits[nidx] || label[nidx] >= 0) continue;
            label[nidx] = blob.label_id;
            queue.emplace_back(nx, ny);
          }
        }
      }
      blob.box = {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
      if (blob.pixel_count >= min_area) blobs.push_back(blob);
    }
  }
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return a.label_id < b.label_id;
  });
  return blobs;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const long long ix0 = std::max(a.x, b.x);
  const long long iy0 = std::max(a.y, b.y);
  const long long ix1 = std::min<long long>(a.x + a.w, b.x + b.w);
  const long long iy1 = std::min<long long>(a.y + a.h, b.y + b.h);
  const long long iw = std::max<long long>(0, ix1 - ix0);
  const long long ih = std::max<long long>(0, iy1 - iy0);
  const long long inter = iw * ih;
  const long long uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace aerialdet
