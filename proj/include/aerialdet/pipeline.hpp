#pragma once

#include <utility>
#include <vector>

#include "aerialdet/classifiers.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/optical_flow.hpp"

namespace aerialdet {

struct DetectorConfig {
  HsConfig hs;
  MotionMaskConfig mask;
  StructuringElement se{2};
  long long min_area = 25;
  int patch_size = 100;
  ClassifierKind classifier_kind = ClassifierKind::scnn_softmax;

  void validate() const {
    hs.validate();
    mask.validate();
    if (se.radius < 0) throw ConfigError("DetectorConfig: radius must be >= 0");
    if (min_area < 1) throw ConfigError("DetectorConfig: min_area must be >= 1");
    if (patch_size < 8) throw ConfigError("DetectorConfig: patch_size must be >= 8");
  }
};

struct ScoredBox {
  BoundingBox box;
  double score = 0.0;
};

struct DetectionResult {
  int frame_index = 0;
  std::vector<BoundingBox> candidates;  // every moving-object box
  std::vector<ScoredBox> humans;        // subset classified as human
};

// flow -> compensation -> magnitude threshold -> closing -> blobs.
inline std::vector<BoundingBox> detect_moving_objects(const GrayFrame& prev, const GrayFrame& curr,
                                                      const DetectorConfig& cfg) {
  cfg.validate();
  if (!prev.same_size(curr)) throw DimensionError("detect_moving_objects: frame size mismatch");
  const FlowField flow = horn_schunck(prev, curr, cfg.hs);
  const BinaryMask raw = motion_mask(flow, cfg.mask);
  const BinaryMask closed = morphological_close(raw, cfg.se);
  std::vector<BoundingBox> boxes;
  for (const Blob& b : connected_components(closed, cfg.min_area)) boxes.push_back(b.box);
  return boxes;
}

struct Patch {
  GrayFrame img;
  BoundingBox box;  // source box in frame coordinates, after clamping
};

struct PatchExtraction {
  std::vector<Patch> patches;
  std::vector<BoundingBox> skipped;  // boxes degenerate after clamping
};

inline GrayFrame crop(const GrayFrame& frame, const BoundingBox& box) {
  GrayFrame out(box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) out.at(x, y) = frame.at(box.x + x, box.y + y);
  }
  return out;
}

inline PatchExtraction extract_patches(const GrayFrame& frame,
                                       const std::vector<BoundingBox>& boxes, int patch_size) {
  if (patch_size < 1) throw ConfigError("extract_patches: patch_size must be >= 1");
  PatchExtraction out;
  for (const BoundingBox& b : boxes) {
    const BoundingBox cb = clamp_box(b, frame.width, frame.height);
    if (cb.w < 1 || cb.h < 1) {
      out.skipped.push_back(b);
      continue;
    }
    out.patches.push_back({resize_bilinear(crop(frame, cb), patch_size, patch_size), cb});
  }
  return out;
}

inline std::vector<std::pair<int, double>> classify_patches(const std::vector<Patch>& patches,
                                                            const PatchClassifier& clf) {
  std::vector<std::pair<int, double>> out;
  out.reserve(patches.size());
  for (const Patch& p : patches) {
    if (p.img.width != clf.input_size() || p.img.height != clf.input_size()) {
      throw DimensionError("classify_patches: patch size does not match classifier input");
    }
    out.push_back(clf.classify(p.img));
  }
  return out;
}

// One DetectionResult per consecutive frame pair, classified on the current
// frame's pixels. Frame 0 produces no result.
inline std::vector<DetectionResult> process_video(const std::vector<GrayFrame>& frames,
                                                  const DetectorConfig& cfg,
                                                  const PatchClassifier& clf) {
  cfg.validate();
  if (frames.size() < 2) throw ConfigError("process_video: need at least 2 frames");
  if (cfg.patch_size != clf.input_size()) {
    throw DimensionError("process_video: patch_size does not match classifier input");
  }
  std::vector<DetectionResult> results;
  results.reserve(frames.size() - 1);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    DetectionResult r;
    r.frame_index = static_cast<int>(i);
    r.candidates = detect_moving_objects(frames[i - 1], frames[i], cfg);
    const PatchExtraction ex = extract_patches(frames[i], r.candidates, cfg.patch_size);
    const auto labels = classify_patches(ex.patches, clf);
    for (std::size_t p = 0; p < ex.patches.size(); ++p) {
      if (labels[p].first == 1) r.humans.push_back({ex.patches[p].box, labels[p].second});
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace aerialdet
