#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/sample.hpp"

namespace aerialdet {

// Smooth deterministic value noise in [0,1] over an unbounded domain:
// hashed lattice values, smoothstep-bilinear interpolation.
inline double value_noise(std::uint64_t seed, double cell, double x, double y) {
  const double gx = x / cell, gy = y / cell;
  const double fx0 = std::floor(gx), fy0 = std::floor(gy);
  const int ix = static_cast<int>(fx0), iy = static_cast<int>(fy0);
  const double fx = gx - fx0, fy = gy - fy0;
  auto corner = [seed](int cx, int cy) {
    const std::uint64_t ux = static_cast<std::uint32_t>(cx);
    const std::uint64_t uy = static_cast<std::uint32_t>(cy);
    const std::uint64_t h = splitmix64(splitmix64(seed ^ (ux << 1 | 1)) ^ uy);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  const double v00 = corner(ix, iy), v10 = corner(ix + 1, iy);
  const double v01 = corner(ix, iy + 1), v11 = corner(ix + 1, iy + 1);
  const double u = fx * fx * (3.0 - 2.0 * fx);
  const double w = fy * fy * (3.0 - 2.0 * fy);
  return v00 * (1 - u) * (1 - w) + v10 * u * (1 - w) + v01 * (1 - u) * w + v11 * u * w;
}

enum class SpriteKind { human, car, clutter };

inline std::string to_string(SpriteKind k) {
  switch (k) {
    case SpriteKind::human: return "human";
    case SpriteKind::car: return "car";
    case SpriteKind::clutter: return "clutter";
  }
  throw ConfigError("unknown sprite kind");
}

inline SpriteKind sprite_kind_from_string(const std::string& s) {
  if (s == "human") return SpriteKind::human;
  if (s == "car") return SpriteKind::car;
  if (s == "clutter") return SpriteKind::clutter;
  throw ConfigError("unknown sprite kind: " + s);
}

// size is the short side; humans are tall 1:2.5, cars wide 2:1.
struct SpriteConfig {
  SpriteKind kind = SpriteKind::human;
  int size = 10;
  double vx = 0.0, vy = 0.0;  // frame-coordinate velocity, px/frame
  std::uint64_t texture_seed = 0;
  double x0 = 0.0, y0 = 0.0;  // top-left at frame 0

  int width() const {
    switch (kind) {
      case SpriteKind::human: return size;
      case SpriteKind::car: return 2 * size;
      case SpriteKind::clutter: return size;
    }
    return size;
  }
  int height() const {
    switch (kind) {
      case SpriteKind::human: return static_cast<int>(std::lround(2.5 * size));
      case SpriteKind::car: return size;
      case SpriteKind::clutter: return size;
    }
    return size;
  }

  BoundingBox box_at(int frame) const {
    return {static_cast<int>(std::lround(x0 + vx * frame)),
            static_cast<int>(std::lround(y0 + vy * frame)), width(), height()};
  }
};

struct SceneConfig {
  int width = 160;
  int height = 120;
  int n_frames = 60;
  double pan_x = 0.0, pan_y = 0.0;  // background drift per frame
  std::vector<SpriteConfig> sprites;
  double noise_sigma = 0.01;
  std::uint64_t seed = 42;

  void validate() const {
    if (width < 8 || height < 8) throw ConfigError("SceneConfig: frame too small");
    if (n_frames < 1) throw ConfigError("SceneConfig: n_frames must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("SceneConfig: noise_sigma must be >= 0");
    for (const SpriteConfig& s : sprites) {
      if (s.size < 2) throw ConfigError("SceneConfig: sprite size must be >= 2");
      for (int f = 0; f < n_frames; f += std::max(1, n_frames - 1)) {
        const BoundingBox b = s.box_at(f);
        if (b.x < 0 || b.y < 0 || b.x + b.w > width || b.y + b.h > height) {
          throw ConfigError("SceneConfig: sprite leaves the frame");
        }
      }
    }
  }
};

struct TruthBox {
  int frame = 0;
  int sprite = 0;
  SpriteKind kind = SpriteKind::human;
  BoundingBox box;
};

struct Scene {
  SceneConfig cfg;
  std::vector<GrayFrame> frames;
  std::vector<TruthBox> truth;  // frame-major, sprite order within a frame
};

namespace detail {

// Sprite-local texture, anchored to the sprite so it translates rigidly.
// Stripe periods stay >= 4 px so a few px/frame of motion does not alias
// the pattern away from the flow estimator.
inline double sprite_texture(const SpriteConfig& s, int lx, int ly) {
  const int period = 4 + static_cast<int>(splitmix64(s.texture_seed ^ 0x7e57) % 3);  // 4..6
  const double jitter = 0.08 * (value_noise(splitmix64(s.texture_seed), 3.0, lx, ly) - 0.5);
  switch (s.kind) {
    case SpriteKind::human: {
      // bright vertical stripes
      const bool on = (lx / period) % 2 == 0;
      return (on ? 0.88 : 0.55) + jitter;
    }
    case SpriteKind::car: {
      // darker horizontal stripes
      const bool on = (ly / period) % 2 == 0;
      return (on ? 0.18 : 0.38) + jitter;
    }
    case SpriteKind::clutter: {
      const bool on = ((lx / period) + (ly / period)) % 2 == 0;
      return (on ? 0.30 : 0.62) + jitter;
    }
  }
  return 0.5;
}

}  // namespace detail

inline Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Scene scene;
  scene.cfg = cfg;
  scene.frames.reserve(static_cast<std::size_t>(cfg.n_frames));
  const std::uint64_t bg_seed = derive_seed(cfg.seed, "scene.bg");
  for (int f = 0; f < cfg.n_frames; ++f) {
    GrayFrame frame(cfg.width, cfg.height);
    const double ox = cfg.pan_x * f, oy = cfg.pan_y * f;
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        frame.at(x, y) = static_cast<float>(0.30 + 0.30 * value_noise(bg_seed, 8.0, x + ox, y + oy));
      }
    }
    for (std::size_t si = 0; si < cfg.sprites.size(); ++si) {
      const SpriteConfig& s = cfg.sprites[si];
      const BoundingBox b = s.box_at(f);
      for (int ly = 0; ly < b.h; ++ly) {
        for (int lx = 0; lx < b.w; ++lx) {
          frame.at(b.x + lx, b.y + ly) = static_cast<float>(detail::sprite_texture(s, lx, ly));
        }
      }
      scene.truth.push_back({f, static_cast<int>(si), s.kind, b});
    }
    if (cfg.noise_sigma > 0.0) {
      Rng noise(derive_seed(cfg.seed, "scene.noise", static_cast<std::uint64_t>(f)));
      for (float& v : frame.data) {
        v = static_cast<float>(v + noise.gaussian(0.0, cfg.noise_sigma));
      }
    }
    for (float& v : frame.data) v = std::min(1.0f, std::max(0.0f, v));
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

// Two-texture patch dataset: positives are striped, negatives are smooth
// noise with a lower mean, imbalanced roughly 1:3. person_id cycles 1..12 so
// the leave-four-out splits can run on it.
struct TextureDatasetConfig {
  int patch_size = 32;
  int n_train = 480;
  int n_test = 240;
  double pos_fraction = 0.25;
  std::uint64_t seed = 42;
};

struct TextureDataset {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

namespace detail {

inline LabeledSample make_texture_sample(int patch_size, bool positive, int person_id,
                                         std::uint64_t seed) {
  Rng rng(seed);
  LabeledSample s;
  s.label = positive ? 1 : 0;
  s.person_id = person_id;
  s.patch = GrayFrame(patch_size, patch_size);
  if (positive) {
    const int period = 3 + static_cast<int>(rng.uniform_index(3));  // 3..5
    const int phase = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(period)));
    const double hi = 0.70 + 0.05 * rng.uniform(), lo = 0.38 + 0.05 * rng.uniform();
    for (int y = 0; y < patch_size; ++y) {
      for (int x = 0; x < patch_size; ++x) {
        const bool on = (((x + phase) / period) % 2) == 0;
        s.patch.at(x, y) = static_cast<float>((on ? hi : lo) + rng.gaussian(0.0, 0.02));
      }
    }
  } else {
    const std::uint64_t tex = rng.next_u64();
    const double base = 0.30 + 0.06 * rng.uniform();
    for (int y = 0; y < patch_size; ++y) {
      for (int x = 0; x < patch_size; ++x) {
        const double v = base + 0.25 * value_noise(tex, 6.0, x, y);
        s.patch.at(x, y) = static_cast<float>(v + rng.gaussian(0.0, 0.02));
      }
    }
  }
  for (float& v : s.patch.data) v = std::min(1.0f, std::max(0.0f, v));
  return s;
}

}  // namespace detail

inline TextureDataset make_texture_dataset(const TextureDatasetConfig& cfg) {
  if (cfg.patch_size < 8) throw ConfigError("TextureDatasetConfig: patch_size must be >= 8");
  if (cfg.n_train < 1 || cfg.n_test < 1) throw ConfigError("TextureDatasetConfig: empty split");
  if (cfg.pos_fraction <= 0.0 || cfg.pos_fraction >= 1.0) {
    throw ConfigError("TextureDatasetConfig: pos_fraction must be in (0,1)");
  }
  TextureDataset ds;
  auto fill = [&](std::vector<LabeledSample>& out, int n, const char* tag) {
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const bool positive = (i % static_cast<int>(std::lround(1.0 / cfg.pos_fraction))) == 0;
      const int person_id = 1 + (i % 12);
      out.push_back(detail::make_texture_sample(
          cfg.patch_size, positive, person_id,
          derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(i))));
    }
  };
  fill(ds.train, cfg.n_train, "texture.train");
  fill(ds.test, cfg.n_test, "texture.test");
  return ds;
}

}  // namespace aerialdet
