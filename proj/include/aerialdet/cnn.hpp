#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/parallel.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/sample.hpp"

namespace aerialdet {

enum class LayerKind { input, conv, relu, maxpool, fc, softmax, classification };

struct LayerDesc {
  LayerKind kind = LayerKind::input;
  int maps = 0;    // conv output maps
  int filter = 0;  // conv kernel side
  int pool = 0;    // pool window and stride
  int units = 0;   // fc output width
};

struct LayerShape {
  int maps = 0;
  int h = 0;
  int w = 0;
  std::size_t flat() const {
    return static_cast<std::size_t>(maps) * h * w;
  }
};

// Convolutional blocks of [conv, relu, maxpool] with an extra relu after
// every pool except the last, then fc(fc_units), relu, fc(2), softmax,
// classification. The defaults give the 17-layer network with map sizes
// 96/48/44/22/18/9.
struct CnnArchitecture {
  std::vector<LayerDesc> layers;
  std::vector<LayerShape> shapes;  // output shape per layer
  int input_size = 0;

  static CnnArchitecture build(int input_size = 100, int blocks = 3, int conv_maps = 20,
                               int filter = 5, int fc_units = 1000) {
    if (input_size < 1 || blocks < 1 || conv_maps < 1 || filter < 1 || fc_units < 1) {
      throw ConfigError("CnnArchitecture: all sizes must be >= 1");
    }
    CnnArchitecture a;
    a.input_size = input_size;
    a.layers.push_back({LayerKind::input});
    for (int b = 0; b < blocks; ++b) {
      a.layers.push_back({LayerKind::conv, conv_maps, filter, 0, 0});
      a.layers.push_back({LayerKind::relu});
      a.layers.push_back({LayerKind::maxpool, 0, 0, 2, 0});
      if (b + 1 < blocks) a.layers.push_back({LayerKind::relu});
    }
    a.layers.push_back({LayerKind::fc, 0, 0, 0, fc_units});
    a.layers.push_back({LayerKind::relu});
    a.layers.push_back({LayerKind::fc, 0, 0, 0, 2});
    a.layers.push_back({LayerKind::softmax});
    a.layers.push_back({LayerKind::classification});
    a.infer_shapes();
    return a;
  }

  void infer_shapes() {
    shapes.clear();
    shapes.reserve(layers.size());
    LayerShape cur{1, input_size, input_size};
    for (const LayerDesc& ld : layers) {
      switch (ld.kind) {
        case LayerKind::input:
          cur = {1, input_size, input_size};
          break;
        case LayerKind::conv:
          if (cur.h < ld.filter || cur.w < ld.filter) {
            throw DimensionError("CnnArchitecture: map smaller than conv filter");
          }
          cur = {ld.maps, cur.h - ld.filter + 1, cur.w - ld.filter + 1};
          break;
        case LayerKind::relu:
          break;
        case LayerKind::maxpool:
          if (cur.h % ld.pool != 0 || cur.w % ld.pool != 0) {
            throw DimensionError("CnnArchitecture: pool window does not tile the map");
          }
          cur = {cur.maps, cur.h / ld.pool, cur.w / ld.pool};
          break;
        case LayerKind::fc:
          cur = {1, 1, ld.units};
          break;
        case LayerKind::softmax:
        case LayerKind::classification:
          break;
      }
      shapes.push_back(cur);
    }
  }

  int layer_count() const { return static_cast<int>(layers.size()); }

  // Spatial side of each conv/pool output, in layer order.
  std::vector<int> map_sizes() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].kind == LayerKind::conv || layers[i].kind == LayerKind::maxpool) {
        out.push_back(shapes[i].h);
      }
    }
    return out;
  }

  int num_classes() const { return shapes.empty() ? 0 : static_cast<int>(shapes.back().flat()); }

  bool operator==(const CnnArchitecture& o) const {
    if (input_size != o.input_size || layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerDesc &a = layers[i], &b = o.layers[i];
      if (a.kind != b.kind || a.maps != b.maps || a.filter != b.filter || a.pool != b.pool ||
          a.units != b.units) {
        return false;
      }
    }
    return true;
  }
};

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double l2 = 1e-4;
  int batch_size = 300;
  int epochs = 30;
  double init_sigma = 0.01;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("SgdConfig: lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("SgdConfig: momentum must be in [0,1)");
    if (l2 < 0.0) throw ConfigError("SgdConfig: l2 must be >= 0");
    if (batch_size < 1) throw ConfigError("SgdConfig: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("SgdConfig: epochs must be >= 1");
    if (init_sigma < 0.0) throw ConfigError("SgdConfig: init_sigma must be >= 0");
  }
};

struct ParamSlot {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> dims;
  bool is_bias = false;

  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }
};

struct CnnNetwork {
  CnnArchitecture arch;
  std::vector<ParamSlot> slots;
  std::vector<double> params;
  std::vector<double> velocity;

  bool initialized() const { return !params.empty(); }

  std::span<double> slot_span(std::size_t i) {
    return {params.data() + slots[i].offset, slots[i].count()};
  }
  std::span<const double> slot_span(std::size_t i) const {
    return {params.data() + slots[i].offset, slots[i].count()};
  }

  const ParamSlot* find_slot(const std::string& name) const {
    for (const auto& s : slots) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

namespace detail {

inline std::vector<ParamSlot> make_slots(const CnnArchitecture& arch) {
  std::vector<ParamSlot> slots;
  std::size_t offset = 0;
  int conv_n = 0, fc_n = 0;
  LayerShape prev{1, arch.input_size, arch.input_size};
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerDesc& ld = arch.layers[i];
    if (ld.kind == LayerKind::conv) {
      ++conv_n;
      ParamSlot w{"conv" + std::to_string(conv_n) + ".w", offset,
                  {static_cast<std::size_t>(ld.maps), static_cast<std::size_t>(prev.maps),
                   static_cast<std::size_t>(ld.filter), static_cast<std::size_t>(ld.filter)},
                  false};
      offset += w.count();
      ParamSlot b{"conv" + std::to_string(conv_n) + ".b", offset,
                  {static_cast<std::size_t>(ld.maps)}, true};
      offset += b.count();
      slots.push_back(std::move(w));
      slots.push_back(std::move(b));
    } else if (ld.kind == LayerKind::fc) {
      ++fc_n;
      ParamSlot w{"fc" + std::to_string(fc_n) + ".w", offset,
                  {static_cast<std::size_t>(ld.units), prev.flat()}, false};
      offset += w.count();
      ParamSlot b{"fc" + std::to_string(fc_n) + ".b", offset,
                  {static_cast<std::size_t>(ld.units)}, true};
      offset += b.count();
      slots.push_back(std::move(w));
      slots.push_back(std::move(b));
    }
    prev = arch.shapes[i];
  }
  return slots;
}

}  // namespace detail

inline CnnNetwork init_network(const CnnArchitecture& arch, const SgdConfig& cfg) {
  cfg.validate();
  CnnNetwork net;
  net.arch = arch;
  net.slots = detail::make_slots(arch);
  std::size_t total = 0;
  for (const auto& s : net.slots) total = std::max(total, s.offset + s.count());
  net.params.assign(total, 0.0);
  net.velocity.assign(total, 0.0);
  Rng rng(derive_seed(cfg.seed, "scnn.init"));
  for (const auto& s : net.slots) {
    if (s.is_bias) continue;
    for (std::size_t i = 0; i < s.count(); ++i) {
      net.params[s.offset + i] = rng.gaussian(0.0, cfg.init_sigma);
    }
  }
  return net;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax: empty logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> y(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    y[i] = std::exp(logits[i] - m);
    denom += y[i];
  }
  for (double& v : y) v /= denom;
  return y;
}

// Sum over samples of -sum_j t_j ln y_j. Mean-loss traces divide by the
// batch size at the call site.
inline double cross_entropy_loss(const std::vector<std::vector<double>>& probs,
                                 const std::vector<std::vector<double>>& targets) {
  if (probs.size() != targets.size()) throw DimensionError("cross_entropy_loss: row count mismatch");
  // Kahan summation: plain accumulation drifts ~n^2 ulp and visibly misses
  // the closed-form n*ln2 check once n reaches the tens of thousands.
  double e = 0.0, comp = 0.0;
  const auto add = [&](double term) {
    const double y = term - comp;
    const double t = e + y;
    comp = (t - e) - y;
    e = t;
  };
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != targets[i].size()) {
      throw DimensionError("cross_entropy_loss: row width mismatch");
    }
    double s = 0.0;
    for (double p : probs[i]) s += p;
    if (std::abs(s - 1.0) > 1e-6) throw NumericError("cross_entropy_loss: row does not sum to 1");
    for (std::size_t j = 0; j < probs[i].size(); ++j) {
      if (targets[i][j] != 0.0) add(-targets[i][j] * std::log(std::max(probs[i][j], 1e-12)));
    }
  }
  return e;
}

struct Batch {
  std::vector<GrayFrame> inputs;
  std::vector<std::array<double, 2>> targets;
};

// Per-sample activation cache: the output of every layer plus the argmax
// routing of each max-pool, everything the backward pass needs.
struct SampleCache {
  std::vector<std::vector<double>> acts;                // per layer
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per layer (empty unless maxpool)
};

namespace detail {

inline void forward_sample(const CnnNetwork& net, const float* pixels, std::size_t n_pixels,
                           SampleCache& cache) {
  const CnnArchitecture& arch = net.arch;
  const std::size_t n_layers = arch.layers.size();
  cache.acts.resize(n_layers);
  cache.pool_argmax.resize(n_layers);
  if (n_pixels != arch.shapes[0].flat()) throw DimensionError("forward: input size mismatch");
  cache.acts[0].assign(pixels, pixels + n_pixels);

  std::size_t conv_i = 0, fc_i = 0;  // running slot index bases
  std::size_t slot = 0;
  for (std::size_t li = 1; li < n_layers; ++li) {
    const LayerDesc& ld = arch.layers[li];
    const LayerShape in_s = arch.shapes[li - 1];
    const LayerShape out_s = arch.shapes[li];
    const std::vector<double>& in = cache.acts[li - 1];
    std::vector<double>& out = cache.acts[li];
    out.resize(out_s.flat());
    switch (ld.kind) {
      case LayerKind::conv: {
        const ParamSlot& ws = net.slots[slot];
        const ParamSlot& bs = net.slots[slot + 1];
        const double* w = net.params.data() + ws.offset;
        const double* b = net.params.data() + bs.offset;
        const int f = ld.filter;
        for (int m = 0; m < out_s.maps; ++m) {
          for (int y = 0; y < out_s.h; ++y) {
            for (int x = 0; x < out_s.w; ++x) {
              double acc = b[m];
              for (int c = 0; c < in_s.maps; ++c) {
                const double* wmc = w + ((static_cast<std::size_t>(m) * in_s.maps + c) * f) * f;
                const double* inc = in.data() + static_cast<std::size_t>(c) * in_s.h * in_s.w;
                for (int ky = 0; ky < f; ++ky) {
                  const double* row = inc + static_cast<std::size_t>(y + ky) * in_s.w + x;
                  const double* wrow = wmc + static_cast<std::size_t>(ky) * f;
                  for (int kx = 0; kx < f; ++kx) acc += wrow[kx] * row[kx];
                }
              }
              out[(static_cast<std::size_t>(m) * out_s.h + y) * out_s.w + x] = acc;
            }
          }
        }
        slot += 2;
        ++conv_i;
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case LayerKind::maxpool: {
        const int p = ld.pool;
        std::vector<std::uint32_t>& amax = cache.pool_argmax[li];
        amax.resize(out_s.flat());
        for (int m = 0; m < out_s.maps; ++m) {
          const std::size_t in_base = static_cast<std::size_t>(m) * in_s.h * in_s.w;
          for (int y = 0; y < out_s.h; ++y) {
            for (int x = 0; x < out_s.w; ++x) {
              double best = -std::numeric_limits<double>::infinity();
              std::uint32_t best_i = 0;
              for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                  const std::size_t ii =
                      in_base + static_cast<std::size_t>(y * p + dy) * in_s.w + (x * p + dx);
                  if (in[ii] > best) {  // strict: ties keep the first in row-major order
                    best = in[ii];
                    best_i = static_cast<std::uint32_t>(ii);
                  }
                }
              }
              const std::size_t oi = (static_cast<std::size_t>(m) * out_s.h + y) * out_s.w + x;
              out[oi] = best;
              amax[oi] = best_i;
            }
          }
        }
        break;
      }
      case LayerKind::fc: {
        const ParamSlot& ws = net.slots[slot];
        const ParamSlot& bs = net.slots[slot + 1];
        const double* w = net.params.data() + ws.offset;
        const double* b = net.params.data() + bs.offset;
        const std::size_t in_n = in.size();
        for (int o = 0; o < ld.units; ++o) {
          double acc = b[o];
          const double* wrow = w + static_cast<std::size_t>(o) * in_n;
          for (std::size_t i = 0; i < in_n; ++i) acc += wrow[i] * in[i];
          out[static_cast<std::size_t>(o)] = acc;
        }
        slot += 2;
        ++fc_i;
        break;
      }
      case LayerKind::softmax:
        out = softmax(in);
        break;
      case LayerKind::classification:
        out = in;
        break;
      case LayerKind::input:
        throw StateError("forward: input layer must be first");
    }
  }
  (void)conv_i;
  (void)fc_i;
}

// Gradient of scale * (per-sample cross-entropy) accumulated into grads.
inline void backward_sample(const CnnNetwork& net, const SampleCache& cache,
                            const std::array<double, 2>& target, double scale,
                            std::vector<double>& grads) {
  const CnnArchitecture& arch = net.arch;
  const int n_layers = static_cast<int>(arch.layers.size());

  // probabilities live in the softmax layer's activations
  int softmax_li = -1, last_fc_li = -1;
  for (int li = 0; li < n_layers; ++li) {
    if (arch.layers[li].kind == LayerKind::softmax) softmax_li = li;
    if (arch.layers[li].kind == LayerKind::fc) last_fc_li = li;
  }
  if (softmax_li < 0 || last_fc_li < 0) throw StateError("backward: architecture lacks softmax/fc");

  const std::vector<double>& y = cache.acts[softmax_li];
  std::vector<double> d(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) d[j] = (y[j] - target[j]) * scale;

  // slot index just past the last parameterized layer
  std::size_t slot = net.slots.size();
  std::vector<double> dprev;
  for (int li = last_fc_li; li >= 1; --li) {
    const LayerDesc& ld = arch.layers[li];
    const LayerShape in_s = arch.shapes[li - 1];
    const LayerShape out_s = arch.shapes[li];
    const std::vector<double>& in = cache.acts[li - 1];
    switch (ld.kind) {
      case LayerKind::fc: {
        slot -= 2;
        const ParamSlot& ws = net.slots[slot];
        const ParamSlot& bs = net.slots[slot + 1];
        const double* w = net.params.data() + ws.offset;
        double* gw = grads.data() + ws.offset;
        double* gb = grads.data() + bs.offset;
        const std::size_t in_n = in.size();
        dprev.assign(in_n, 0.0);
        for (int o = 0; o < ld.units; ++o) {
          const double dd = d[static_cast<std::size_t>(o)];
          gb[o] += dd;
          double* gwrow = gw + static_cast<std::size_t>(o) * in_n;
          const double* wrow = w + static_cast<std::size_t>(o) * in_n;
          for (std::size_t i = 0; i < in_n; ++i) {
            gwrow[i] += dd * in[i];
            dprev[i] += dd * wrow[i];
          }
        }
        d.swap(dprev);
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (!(in[i] > 0.0)) d[i] = 0.0;
        }
        break;
      case LayerKind::maxpool: {
        const std::vector<std::uint32_t>& amax = cache.pool_argmax[li];
        dprev.assign(in_s.flat(), 0.0);
        for (std::size_t oi = 0; oi < d.size(); ++oi) dprev[amax[oi]] += d[oi];
        d.swap(dprev);
        break;
      }
      case LayerKind::conv: {
        slot -= 2;
        const ParamSlot& ws = net.slots[slot];
        const ParamSlot& bs = net.slots[slot + 1];
        const double* w = net.params.data() + ws.offset;
        double* gw = grads.data() + ws.offset;
        double* gb = grads.data() + bs.offset;
        const int f = ld.filter;
        dprev.assign(in_s.flat(), 0.0);
        for (int m = 0; m < out_s.maps; ++m) {
          for (int y2 = 0; y2 < out_s.h; ++y2) {
            for (int x2 = 0; x2 < out_s.w; ++x2) {
              const double dd = d[(static_cast<std::size_t>(m) * out_s.h + y2) * out_s.w + x2];
              if (dd == 0.0) continue;
              gb[m] += dd;
              for (int c = 0; c < in_s.maps; ++c) {
                const std::size_t wmc = ((static_cast<std::size_t>(m) * in_s.maps + c) * f) * f;
                const std::size_t in_base = static_cast<std::size_t>(c) * in_s.h * in_s.w;
                for (int ky = 0; ky < f; ++ky) {
                  const std::size_t in_row = in_base + static_cast<std::size_t>(y2 + ky) * in_s.w + x2;
                  const std::size_t w_row = wmc + static_cast<std::size_t>(ky) * f;
                  for (int kx = 0; kx < f; ++kx) {
                    gw[w_row + kx] += dd * in[in_row + kx];
                    dprev[in_row + kx] += dd * w[w_row + kx];
                  }
                }
              }
            }
          }
        }
        d.swap(dprev);
        break;
      }
      default:
        throw StateError("backward: unexpected layer below the last fc");
    }
  }
}

}  // namespace detail

struct ForwardResult {
  std::vector<std::vector<double>> probs;  // one row per sample
};

inline ForwardResult forward(const CnnNetwork& net, const Batch& batch) {
  if (!net.initialized()) throw StateError("forward: network not initialized");
  if (batch.inputs.size() != batch.targets.size() && !batch.targets.empty()) {
    throw DimensionError("forward: inputs/targets count mismatch");
  }
  ForwardResult r;
  r.probs.resize(batch.inputs.size());
  int softmax_li = -1;
  for (std::size_t li = 0; li < net.arch.layers.size(); ++li) {
    if (net.arch.layers[li].kind == LayerKind::softmax) softmax_li = static_cast<int>(li);
  }
  SampleCache cache;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    detail::forward_sample(net, batch.inputs[i].data.data(), batch.inputs[i].data.size(), cache);
    r.probs[i] = cache.acts[softmax_li];
  }
  return r;
}

// Gradients of the batch-mean cross-entropy with respect to every parameter,
// plus the summed loss. Samples are processed in fixed chunks so the result
// does not depend on the worker count.
inline std::pair<std::vector<double>, double> batch_gradients(
    const CnnNetwork& net, const std::vector<const GrayFrame*>& inputs,
    const std::vector<std::array<double, 2>>& targets) {
  if (!net.initialized()) throw StateError("batch_gradients: network not initialized");
  if (inputs.size() != targets.size()) throw DimensionError("batch_gradients: count mismatch");
  const std::size_t n = inputs.size();
  if (n == 0) return {std::vector<double>(net.params.size(), 0.0), 0.0};
  const double scale = 1.0 / static_cast<double>(n);
  const std::size_t chunk = (n + 3) / 4;  // at most 4 gradient buffers
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  int softmax_li = -1;
  for (std::size_t li = 0; li < net.arch.layers.size(); ++li) {
    if (net.arch.layers[li].kind == LayerKind::softmax) softmax_li = static_cast<int>(li);
  }
  parallel_chunks(n, chunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
    std::vector<double>& g = chunk_grads[ci];
    g.assign(net.params.size(), 0.0);
    SampleCache cache;
    double loss = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      detail::forward_sample(net, inputs[i]->data.data(), inputs[i]->data.size(), cache);
      const std::vector<double>& y = cache.acts[softmax_li];
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (targets[i][j] != 0.0) loss -= targets[i][j] * std::log(std::max(y[j], 1e-12));
      }
      detail::backward_sample(net, cache, targets[i], scale, g);
    }
    chunk_loss[ci] = loss;
  });
  std::vector<double> grads(net.params.size(), 0.0);
  double loss = 0.0;
  for (std::size_t ci = 0; ci < n_chunks; ++ci) {
    const std::vector<double>& g = chunk_grads[ci];
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
    loss += chunk_loss[ci];
  }
  return {std::move(grads), loss};
}

// Velocity-form momentum: vel <- momentum*vel - lr*(g + l2*p); p <- p + vel.
// Equivalent to p_{k+1} = p_k - lr*g_eff + momentum*(p_k - p_{k-1}).
inline void apply_sgd_momentum(std::span<double> p, std::span<double> vel,
                               std::span<const double> g, double lr, double momentum, double l2) {
  if (p.size() != vel.size() || p.size() != g.size()) {
    throw DimensionError("apply_sgd_momentum: size mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double geff = g[i] + l2 * p[i];
    vel[i] = momentum * vel[i] - lr * geff;
    p[i] += vel[i];
  }
}

// Biases are excluded from the L2 term.
inline void sgd_momentum_step(CnnNetwork& net, const std::vector<double>& grads,
                              const SgdConfig& cfg) {
  if (grads.size() != net.params.size()) throw DimensionError("sgd_momentum_step: grad size mismatch");
  for (std::size_t si = 0; si < net.slots.size(); ++si) {
    const ParamSlot& s = net.slots[si];
    apply_sgd_momentum({net.params.data() + s.offset, s.count()},
                       {net.velocity.data() + s.offset, s.count()},
                       {grads.data() + s.offset, s.count()}, cfg.lr, cfg.momentum,
                       s.is_bias ? 0.0 : cfg.l2);
  }
}

struct ScnnTrainResult {
  CnnNetwork net;
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
  std::vector<std::string> warnings;
};

// Trained parameters are rounded through 32-bit floats at the end so the
// serialized model predicts exactly like the in-memory one.
inline void quantize_params_f32(CnnNetwork& net) {
  for (double& p : net.params) p = static_cast<double>(static_cast<float>(p));
}

inline ScnnTrainResult train_scnn(const std::vector<LabeledSample>& data,
                                  const CnnArchitecture& arch, const SgdConfig& cfg) {
  cfg.validate();
  if (data.size() < 2) throw ConfigError("train_scnn: need at least 2 samples");
  ScnnTrainResult res;
  bool has_pos = false, has_neg = false;
  for (const auto& s : data) {
    if (s.patch.width != arch.input_size || s.patch.height != arch.input_size) {
      throw DimensionError("train_scnn: patch size does not match architecture input");
    }
    (s.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    res.warnings.push_back("training data contains a single class; model will be degenerate");
  }

  res.net = init_network(arch, cfg);
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<const GrayFrame*> inputs;
  std::vector<std::array<double, 2>> targets;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "scnn.shuffle", static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);
    double epoch_loss_sum = 0.0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(n, b + static_cast<std::size_t>(cfg.batch_size));
      inputs.clear();
      targets.clear();
      for (std::size_t i = b; i < e; ++i) {
        const LabeledSample& s = data[order[i]];
        inputs.push_back(&s.patch);
        targets.push_back(s.label == 1 ? std::array<double, 2>{0.0, 1.0}
                                       : std::array<double, 2>{1.0, 0.0});
      }
      auto [grads, loss_sum] = batch_gradients(res.net, inputs, targets);
      epoch_loss_sum += loss_sum;
      sgd_momentum_step(res.net, grads, cfg);
    }
    res.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(n));
  }
  quantize_params_f32(res.net);
  return res;
}

// Activations of the wide fully connected layer after its relu; the feature
// vector consumed by the SVM head.
inline std::vector<double> extract_fc_features(const CnnNetwork& net, const GrayFrame& patch) {
  if (!net.initialized()) throw StateError("extract_fc_features: network not initialized");
  if (patch.width != net.arch.input_size || patch.height != net.arch.input_size) {
    throw DimensionError("extract_fc_features: patch size mismatch");
  }
  int fc_li = -1;
  for (std::size_t li = 0; li < net.arch.layers.size(); ++li) {
    if (net.arch.layers[li].kind == LayerKind::fc) {
      fc_li = static_cast<int>(li);
      break;
    }
  }
  if (fc_li < 0 || fc_li + 1 >= net.arch.layer_count() ||
      net.arch.layers[fc_li + 1].kind != LayerKind::relu) {
    throw StateError("extract_fc_features: architecture lacks fc+relu feature layer");
  }
  SampleCache cache;
  detail::forward_sample(net, patch.data.data(), patch.data.size(), cache);
  return cache.acts[static_cast<std::size_t>(fc_li) + 1];
}

// (predicted label in {0,1}, class probabilities)
inline std::pair<int, std::vector<double>> scnn_predict(const CnnNetwork& net,
                                                        const GrayFrame& patch) {
  if (!net.initialized()) throw StateError("scnn_predict: network not initialized");
  if (patch.width != net.arch.input_size || patch.height != net.arch.input_size) {
    throw DimensionError("scnn_predict: patch size mismatch");
  }
  int softmax_li = -1;
  for (std::size_t li = 0; li < net.arch.layers.size(); ++li) {
    if (net.arch.layers[li].kind == LayerKind::softmax) softmax_li = static_cast<int>(li);
  }
  SampleCache cache;
  detail::forward_sample(net, patch.data.data(), patch.data.size(), cache);
  const std::vector<double>& y = cache.acts[softmax_li];
  int label = 0;
  for (std::size_t j = 1; j < y.size(); ++j) {
    if (y[j] > y[label]) label = static_cast<int>(j);
  }
  return {label, y};
}

}  // namespace aerialdet
