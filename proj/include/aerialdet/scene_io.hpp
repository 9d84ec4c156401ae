#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerialdet/errors.hpp"
#include "aerialdet/eval.hpp"
#include "aerialdet/image_io.hpp"
#include "aerialdet/scene.hpp"

namespace aerialdet {

// On-disk scene layout:
//   <dir>/frames/frame_000000.png ...   grayscale frames
//   <dir>/truth.jsonl                   one ground-truth box per line
//   <dir>/scene.json                    geometry + provenance metadata
struct SceneMeta {
  int width = 0;
  int height = 0;
  int n_frames = 0;
  int person_id = 0;
  std::string activity;
  std::uint64_t seed = 0;
};

inline std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.png", index);
  return buf;
}

inline void save_scene(const std::filesystem::path& dir, const Scene& scene, int person_id = 0,
                       const std::string& activity = "walking") {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create scene directory: " + dir.string());

  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    write_png_gray(dir / "frames" / frame_filename(static_cast<int>(i)), scene.frames[i]);
  }

  {
    detail::AtomicFileWriter w(dir / "truth.jsonl");
    for (const TruthBox& t : scene.truth) {
      nlohmann::ordered_json line;
      line["frame"] = t.frame;
      line["sprite"] = t.sprite;
      line["kind"] = to_string(t.kind);
      line["box"] = {t.box.x, t.box.y, t.box.w, t.box.h};
      w.stream() << line.dump() << '\n';
    }
    w.commit();
  }

  {
    nlohmann::ordered_json meta;
    meta["width"] = scene.cfg.width;
    meta["height"] = scene.cfg.height;
    meta["n_frames"] = scene.cfg.n_frames;
    meta["person_id"] = person_id;
    meta["activity"] = activity;
    meta["seed"] = scene.cfg.seed;
    detail::AtomicFileWriter w(dir / "scene.json");
    w.stream() << meta.dump(2) << '\n';
    w.commit();
  }
}

inline SceneMeta load_scene_meta(const std::filesystem::path& dir) {
  std::ifstream in(dir / "scene.json");
  if (!in) throw IoError("cannot open " + (dir / "scene.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
    SceneMeta m;
    m.width = meta.at("width").get<int>();
    m.height = meta.at("height").get<int>();
    m.n_frames = meta.at("n_frames").get<int>();
    m.person_id = meta.at("person_id").get<int>();
    m.activity = meta.at("activity").get<std::string>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad scene.json in " + dir.string() + ": " + e.what());
  }
}

struct TruthRecord {
  int frame = 0;
  int sprite = 0;
  std::string kind;
  BoundingBox box;
};

inline std::vector<TruthRecord> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<TruthRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      TruthRecord r;
      r.frame = j.at("frame").get<int>();
      r.sprite = j.at("sprite").get<int>();
      r.kind = j.at("kind").get<std::string>();
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 4) throw FormatError("box must be [x,y,w,h]");
      r.box = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad truth line " + std::to_string(line_no) + " in " + path.string() +
                        ": " + e.what());
    }
  }
  return out;
}

// Loads a saved scene directory in the shape the dataset builder consumes.
// Only boxes whose kind is "human" become labeling targets.
inline VideoForDataset load_scene_video(const std::filesystem::path& dir) {
  const SceneMeta meta = load_scene_meta(dir);
  VideoForDataset video;
  video.person_id = meta.person_id;
  video.activity = meta.activity;

  const std::vector<std::filesystem::path> frame_files = list_frames(dir / "frames");
  if (static_cast<int>(frame_files.size()) != meta.n_frames) {
    throw FormatError("scene " + dir.string() + " metadata says " +
                      std::to_string(meta.n_frames) + " frames but " +
                      std::to_string(frame_files.size()) + " are present");
  }
  video.frames.reserve(frame_files.size());
  for (const auto& f : frame_files) {
    GrayFrame frame = read_frame(f);
    if (frame.width != meta.width || frame.height != meta.height) {
      throw FormatError("frame size mismatch in " + dir.string());
    }
    video.frames.push_back(std::move(frame));
  }

  video.human_boxes.assign(video.frames.size(), {});
  for (const TruthRecord& r : load_truth(dir / "truth.jsonl")) {
    if (r.frame < 0 || r.frame >= static_cast<int>(video.frames.size())) {
      throw FormatError("truth frame index out of range in " + dir.string());
    }
    if (r.kind == "human") video.human_boxes[static_cast<std::size_t>(r.frame)].push_back(r.box);
  }
  return video;
}

}  // namespace aerialdet
