#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/image_io.hpp"
#include "aerialdet/pipeline.hpp"

namespace aerialdet {

struct RgbColor {
  float r = 0.0f, g = 0.0f, b = 0.0f;
};

constexpr RgbColor kCandidateColor{0.0f, 1.0f, 0.0f};
constexpr RgbColor kHumanColor{1.0f, 0.0f, 0.0f};

// Rectangle outline drawn inward from the box edge, clipped to the image.
inline void draw_rect(RgbImage& img, const BoundingBox& box, RgbColor color, int thickness) {
  if (thickness < 1 || box.w <= 0 || box.h <= 0) return;
  const int x1 = box.x + box.w - 1;
  const int y1 = box.y + box.h - 1;
  auto plot = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * img.width + x);
    img.data[o] = color.r;
    img.data[o + 1] = color.g;
    img.data[o + 2] = color.b;
  };
  for (int t = 0; t < thickness; ++t) {
    const int top = box.y + t, bottom = y1 - t;
    const int left = box.x + t, right = x1 - t;
    if (top > bottom || left > right) break;
    for (int x = left; x <= right; ++x) {
      plot(x, top);
      plot(x, bottom);
    }
    for (int y = top; y <= bottom; ++y) {
      plot(left, y);
      plot(right, y);
    }
  }
}

inline RgbImage gray_to_rgb(const GrayFrame& f) {
  RgbImage out(f.width, f.height);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    float v = f.data[i];
    if (v < 0.0f) v = 0.0f;
    if (v > 1.0f) v = 1.0f;
    out.data[3 * i] = v;
    out.data[3 * i + 1] = v;
    out.data[3 * i + 2] = v;
  }
  return out;
}

// Writes annotated PNG copies of every frame plus a detections.jsonl that
// mirrors each drawn box. Frames with no detection result (the first frame
// of a sequence) are copied unmodified.
inline void render_annotations(const std::vector<GrayFrame>& frames,
                               const std::vector<DetectionResult>& results,
                               const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory: " + out_dir.string());
  }

  std::vector<const DetectionResult*> by_frame(frames.size(), nullptr);
  for (const DetectionResult& r : results) {
    if (r.frame_index < 0 || r.frame_index >= static_cast<int>(frames.size())) {
      throw DimensionError("render_annotations: result frame index out of range");
    }
    by_frame[static_cast<std::size_t>(r.frame_index)] = &r;
  }

  detail::AtomicFileWriter jl(out_dir / "detections.jsonl");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    RgbImage img = gray_to_rgb(frames[i]);
    if (const DetectionResult* r = by_frame[i]) {
      for (const BoundingBox& b : r->candidates) draw_rect(img, b, kCandidateColor, 1);
      for (const ScoredBox& s : r->humans) draw_rect(img, s.box, kHumanColor, 2);
      for (const BoundingBox& b : r->candidates) {
        nlohmann::ordered_json line;
        line["frame"] = r->frame_index;
        line["class"] = "candidate";
        line["box"] = {b.x, b.y, b.w, b.h};
        line["score"] = nullptr;
        jl.stream() << line.dump() << '\n';
      }
      for (const ScoredBox& s : r->humans) {
        nlohmann::ordered_json line;
        line["frame"] = r->frame_index;
        line["class"] = "human";
        line["box"] = {s.box.x, s.box.y, s.box.w, s.box.h};
        line["score"] = s.score;
        jl.stream() << line.dump() << '\n';
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06d.png", static_cast<int>(i));
    write_png_rgb(out_dir / name, img);
  }
  jl.commit();
}

}  // namespace aerialdet
