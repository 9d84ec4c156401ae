#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/parallel.hpp"

namespace aerialdet {

struct DerivativeField {
  int width = 0;
  int height = 0;
  std::vector<double> ix, iy, it;

  DerivativeField() = default;
  DerivativeField(int w, int h)
      : width(w),
        height(h),
        ix(static_cast<std::size_t>(w) * h, 0.0),
        iy(static_cast<std::size_t>(w) * h, 0.0),
        it(static_cast<std::size_t>(w) * h, 0.0) {
    if (w < 1 || h < 1) throw DimensionError("DerivativeField: dimensions must be >= 1");
  }

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> h, v;

  FlowField() = default;
  FlowField(int w, int h_)
      : width(w),
        height(h_),
        h(static_cast<std::size_t>(w) * h_, 0.0),
        v(static_cast<std::size_t>(w) * h_, 0.0) {
    if (w < 1 || h_ < 1) throw DimensionError("FlowField: dimensions must be >= 1");
  }

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

struct HsConfig {
  double alpha = 1.0;   // smoothness weight
  int max_iters = 100;
  double tol = 1e-4;    // stop when mean |dh|+|dv| per pixel drops below

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("HsConfig: alpha must be > 0");
    if (max_iters < 1) throw ConfigError("HsConfig: max_iters must be >= 1");
    if (tol < 0.0) throw ConfigError("HsConfig: tol must be >= 0");
  }
};

struct MotionMaskConfig {
  double k_sigma = 1.0;
  bool compensate_global = true;

  void validate() const {
    if (k_sigma < 0.0) throw ConfigError("MotionMaskConfig: k_sigma must be >= 0");
  }
};

// Cube-stencil derivatives: each value averages the four forward differences
// over the 2x2x2 block spanning both frames. The last row/column has no
// forward difference of its own and reuses the one from the previous
// row/column (clamped stencil origin), so a linear ramp reports a constant
// gradient all the way to the frame edge.
inline DerivativeField spatiotemporal_derivatives(const GrayFrame& prev, const GrayFrame& curr) {
  if (!prev.same_size(curr)) throw DimensionError("spatiotemporal_derivatives: frame size mismatch");
  const int w = prev.width, h = prev.height;
  DerivativeField d(w, h);
  for (int y = 0; y < h; ++y) {
    const int ys = (h >= 2) ? std::min(y, h - 2) : 0;
    const int y1 = std::min(ys + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xs = (w >= 2) ? std::min(x, w - 2) : 0;
      const int x1 = std::min(xs + 1, w - 1);
      const double p00 = prev.at(xs, ys), p10 = prev.at(x1, ys);
      const double p01 = prev.at(xs, y1), p11 = prev.at(x1, y1);
      const double c00 = curr.at(xs, ys), c10 = curr.at(x1, ys);
      const double c01 = curr.at(xs, y1), c11 = curr.at(x1, y1);
      const std::size_t i = d.idx(x, y);
      d.ix[i] = 0.25 * ((p10 - p00) + (p11 - p01) + (c10 - c00) + (c11 - c01));
      d.iy[i] = 0.25 * ((p01 - p00) + (p11 - p10) + (c01 - c00) + (c11 - c10));
      d.it[i] = 0.25 * ((c00 - p00) + (c10 - p10) + (c01 - p01) + (c11 - p11));
    }
  }
  return d;
}

namespace detail {

// Weighted 3x3 neighborhood average (corners 1/12, edges 1/6, center 0)
// with border replication. Out-of-range taps fold back onto in-range pixels,
// which keeps the implied weight graph symmetric; hs_energy relies on that.
inline void weighted_average(const std::vector<double>& src, int w, int h,
                             std::vector<double>& dst) {
  static constexpr double kw[3][3] = {{1.0 / 12, 1.0 / 6, 1.0 / 12},
                                      {1.0 / 6, 0.0, 1.0 / 6},
                                      {1.0 / 12, 1.0 / 6, 1.0 / 12}};
  parallel_chunks(static_cast<std::size_t>(h), 64, [&](std::size_t, std::size_t yb, std::size_t ye) {
    for (std::size_t yy = yb; yy < ye; ++yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            acc += kw[dy + 1][dx + 1] * src[static_cast<std::size_t>(sy) * w + sx];
          }
        }
        dst[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
  });
}

}  // namespace detail

// Discrete energy the Jacobi iteration minimizes: the data term
// sum (Ix h + Iy v + It)^2 plus alpha^2 times the Dirichlet form of the
// averaging graph, computed as sum h(h - hbar) + v(v - vbar). Non-increasing
// along horn_schunck iterates; exposed for diagnostics and tests.
inline double hs_energy(const DerivativeField& d, const FlowField& f, double alpha) {
  if (d.width != f.width || d.height != f.height) {
    throw DimensionError("hs_energy: field size mismatch");
  }
  const std::size_t n = f.h.size();
  std::vector<double> hbar(n), vbar(n);
  detail::weighted_average(f.h, f.width, f.height, hbar);
  detail::weighted_average(f.v, f.width, f.height, vbar);
  double data = 0.0, smooth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = d.ix[i] * f.h[i] + d.iy[i] * f.v[i] + d.it[i];
    data += r * r;
    smooth += f.h[i] * (f.h[i] - hbar[i]) + f.v[i] * (f.v[i] - vbar[i]);
  }
  return data + alpha * alpha * smooth;
}

// Horn-Schunck flow by Jacobi iteration from zero initial velocity:
//   h+ = hbar - Ix (Ix hbar + Iy vbar + It) / (alpha^2 + Ix^2 + Iy^2)
//   v+ = vbar - Iy (Ix hbar + Iy vbar + It) / (alpha^2 + Ix^2 + Iy^2)
// Stops after max_iters or once the mean per-pixel |dh|+|dv| falls below tol.
inline FlowField horn_schunck(const DerivativeField& d, const HsConfig& cfg) {
  cfg.validate();
  const int w = d.width, h = d.height;
  FlowField f(w, h);
  const std::size_t n = f.h.size();
  std::vector<double> hbar(n), vbar(n), hn(n), vn(n);
  const double a2 = cfg.alpha * cfg.alpha;
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (static_cast<std::size_t>(h) + chunk - 1) / chunk;
  std::vector<double> chunk_delta(n_chunks);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    detail::weighted_average(f.h, w, h, hbar);
    detail::weighted_average(f.v, w, h, vbar);
    std::fill(chunk_delta.begin(), chunk_delta.end(), 0.0);
    parallel_chunks(static_cast<std::size_t>(h), chunk,
                    [&](std::size_t ci, std::size_t yb, std::size_t ye) {
      double local = 0.0;
      for (std::size_t yy = yb; yy < ye; ++yy) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = yy * static_cast<std::size_t>(w) + x;
          const double num = d.ix[i] * hbar[i] + d.iy[i] * vbar[i] + d.it[i];
          const double den = a2 + d.ix[i] * d.ix[i] + d.iy[i] * d.iy[i];
          const double s = num / den;
          hn[i] = hbar[i] - d.ix[i] * s;
          vn[i] = vbar[i] - d.iy[i] * s;
          local += std::abs(hn[i] - f.h[i]) + std::abs(vn[i] - f.v[i]);
        }
      }
      chunk_delta[ci] = local;
    });
    f.h.swap(hn);
    f.v.swap(vn);
    double delta = 0.0;
    for (double cd : chunk_delta) delta += cd;  // fixed chunk order, thread-count independent
    if (delta / static_cast<double>(n) < cfg.tol) break;
  }
  return f;
}

inline FlowField horn_schunck(const GrayFrame& prev, const GrayFrame& curr, const HsConfig& cfg) {
  return horn_schunck(spatiotemporal_derivatives(prev, curr), cfg);
}

namespace detail {

inline double median_of(std::vector<double> vals) {
  const std::size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
  return vals[mid];
}

}  // namespace detail

// Removes camera motion by subtracting the per-component median; a mostly
// static background drags the median to the pan velocity.
inline FlowField compensate_global_motion(const FlowField& f) {
  FlowField out = f;
  const double mh = detail::median_of(f.h);
  const double mv = detail::median_of(f.v);
  for (auto& x : out.h) x -= mh;
  for (auto& x : out.v) x -= mv;
  return out;
}

// Thresholds flow magnitude at mean + k_sigma * population standard
// deviation (strict >), optionally compensating global motion first.
inline BinaryMask motion_mask(const FlowField& f, const MotionMaskConfig& cfg) {
  cfg.validate();
  const FlowField* src = &f;
  FlowField comp;
  if (cfg.compensate_global) {
    comp = compensate_global_motion(f);
    src = &comp;
  }
  const std::size_t n = src->h.size();
  std::vector<double> mag(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mag[i] = std::hypot(src->h[i], src->v[i]);
    mean += mag[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dvar = mag[i] - mean;
    var += dvar * dvar;
  }
  var /= static_cast<double>(n);
  const double thresh = mean + cfg.k_sigma * std::sqrt(var);
  BinaryMask mask(f.width, f.height);
  for (std::size_t i = 0; i < n; ++i) mask.bits[i] = mag[i] > thresh ? 1 : 0;
  return mask;
}

}  // namespace aerialdet
