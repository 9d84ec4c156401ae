#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <memory>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "aerialdet/classifiers.hpp"
#include "aerialdet/cnn.hpp"
#include "aerialdet/elm.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/features.hpp"
#include "aerialdet/sample.hpp"
#include "aerialdet/svm.hpp"

namespace aerialdet {

// Binary model container: magic "AERD", u32 version, kind string, key=value
// metadata, named f32 tensors, and a trailing CRC32 over everything after
// the magic. All integers little-endian; strings are u32 length + bytes.
struct TensorBlob {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
  }
};

struct ModelContainer {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;  // insertion order preserved
  std::vector<TensorBlob> tensors;

  const TensorBlob& tensor(const std::string& name) const {
    for (const TensorBlob& t : tensors) {
      if (t.name == name) return t;
    }
    throw FormatError("container missing tensor: " + name);
  }

  bool has_meta(const std::string& key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return true;
    }
    return false;
  }

  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    throw FormatError("container missing metadata key: " + key);
  }

  void set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : meta) {
      if (k == key) {
        v = value;
        return;
      }
    }
    meta.emplace_back(key, value);
  }
};

constexpr std::uint32_t kContainerVersion = 1;

namespace detail {

inline void put_string(std::string& buf, const std::string& s) {
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

struct ByteReader {
  const std::uint8_t* p;
  std::size_t remaining;
  std::string origin;

  void need(std::size_t n) const {
    if (n > remaining) throw FormatError("container truncated: " + origin);
  }

  template <typename T>
  T take_le() {
    need(sizeof(T));
    const T v = get_le<T>(p);
    p += sizeof(T);
    remaining -= sizeof(T);
    return v;
  }

  std::string take_string() {
    const std::uint32_t n = take_le<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    remaining -= n;
    return s;
  }
};

}  // namespace detail

inline void save_container(const std::filesystem::path& path, const ModelContainer& c) {
  std::string buf = "AERD";
  detail::put_le<std::uint32_t>(buf, kContainerVersion);
  detail::put_string(buf, c.kind);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(c.meta.size()));
  for (const auto& [k, v] : c.meta) {
    detail::put_string(buf, k);
    detail::put_string(buf, v);
  }
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(c.tensors.size()));
  for (const TensorBlob& t : c.tensors) {
    if (t.data.size() != t.count()) {
      throw DimensionError("save_container: tensor data does not match dims: " + t.name);
    }
    detail::put_string(buf, t.name);
    buf.push_back(0);  // dtype 0 = f32
    buf.push_back(static_cast<char>(t.dims.size()));
    for (std::uint64_t d : t.dims) detail::put_le<std::uint64_t>(buf, d);
    for (float v : t.data) detail::put_f32_le(buf, v);
  }
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data() + 4), static_cast<uInt>(buf.size() - 4)));
  detail::put_le<std::uint32_t>(buf, crc);
  detail::AtomicFileWriter w(path);
  w.stream().write(buf.data(), static_cast<std::streamsize>(buf.size()));
  w.commit();
}

inline ModelContainer load_container(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "AERD", 4) != 0) {
    throw FormatError("not a model container: " + path.string());
  }
  const std::uint32_t stored_crc = detail::get_le<std::uint32_t>(bytes.data() + bytes.size() - 4);
  const auto crc = static_cast<std::uint32_t>(crc32(
      0L, reinterpret_cast<const Bytef*>(bytes.data() + 4), static_cast<uInt>(bytes.size() - 8)));
  if (crc != stored_crc) throw FormatError("container checksum mismatch: " + path.string());

  detail::ByteReader r{bytes.data() + 4, bytes.size() - 8, path.string()};
  const std::uint32_t version = r.take_le<std::uint32_t>();
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version: " + path.string());
  }
  ModelContainer c;
  c.kind = r.take_string();
  const std::uint32_t n_meta = r.take_le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.take_string();
    std::string v = r.take_string();
    c.meta.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = r.take_le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorBlob t;
    t.name = r.take_string();
    const std::uint8_t dtype = r.take_le<std::uint8_t>();
    if (dtype != 0) throw FormatError("unsupported tensor dtype: " + path.string());
    const std::uint8_t ndim = r.take_le<std::uint8_t>();
    for (std::uint8_t d = 0; d < ndim; ++d) t.dims.push_back(r.take_le<std::uint64_t>());
    const std::uint64_t n = t.count();
    r.need(n * 4);
    t.data.resize(n);
    for (std::uint64_t j = 0; j < n; ++j) t.data[j] = detail::get_f32_le(r.p + j * 4);
    r.p += n * 4;
    r.remaining -= n * 4;
    c.tensors.push_back(std::move(t));
  }
  if (r.remaining != 0) throw FormatError("trailing bytes in container: " + path.string());
  return c;
}

namespace detail {

inline TensorBlob tensor_from(const std::string& name, const Eigen::MatrixXd& m) {
  TensorBlob t;
  t.name = name;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data.push_back(static_cast<float>(m(i, j)));
  }
  return t;
}

inline TensorBlob tensor_from(const std::string& name, const Eigen::VectorXd& v) {
  TensorBlob t;
  t.name = name;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.data.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data.push_back(static_cast<float>(v(i)));
  return t;
}

inline Eigen::MatrixXd matrix_from(const TensorBlob& t) {
  if (t.dims.size() != 2) throw FormatError("tensor is not a matrix: " + t.name);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1]));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t.data[k++];
  }
  return m;
}

inline Eigen::VectorXd vector_from(const TensorBlob& t) {
  if (t.dims.size() != 1) throw FormatError("tensor is not a vector: " + t.name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.dims[0]));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = t.data[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace detail

// ---- S-CNN ----

inline ModelContainer to_container(const CnnNetwork& net) {
  if (!net.initialized()) throw StateError("to_container: network not initialized");
  ModelContainer c;
  c.kind = "scnn";
  c.set_meta("input_size", std::to_string(net.arch.input_size));
  // layer list echo for validation on load
  std::string layer_echo;
  for (const LayerDesc& ld : net.arch.layers) {
    switch (ld.kind) {
      case LayerKind::input: layer_echo += "input;"; break;
      case LayerKind::conv:
        layer_echo += "conv(" + std::to_string(ld.maps) + "," + std::to_string(ld.filter) + ");";
        break;
      case LayerKind::relu: layer_echo += "relu;"; break;
      case LayerKind::maxpool: layer_echo += "maxpool(" + std::to_string(ld.pool) + ");"; break;
      case LayerKind::fc: layer_echo += "fc(" + std::to_string(ld.units) + ");"; break;
      case LayerKind::softmax: layer_echo += "softmax;"; break;
      case LayerKind::classification: layer_echo += "classification;"; break;
    }
  }
  c.set_meta("layers", layer_echo);
  for (std::size_t si = 0; si < net.slots.size(); ++si) {
    const ParamSlot& s = net.slots[si];
    TensorBlob t;
    t.name = s.name;
    t.dims.assign(s.dims.begin(), s.dims.end());
    t.data.reserve(s.count());
    for (std::size_t i = 0; i < s.count(); ++i) {
      t.data.push_back(static_cast<float>(net.params[s.offset + i]));
    }
    c.tensors.push_back(std::move(t));
  }
  return c;
}

inline CnnArchitecture architecture_from_layer_echo(const std::string& echo, int input_size) {
  CnnArchitecture a;
  a.input_size = input_size;
  std::size_t pos = 0;
  while (pos < echo.size()) {
    const std::size_t end = echo.find(';', pos);
    if (end == std::string::npos) break;
    const std::string item = echo.substr(pos, end - pos);
    pos = end + 1;
    auto args_of = [&](const std::string& s) {
      const std::size_t l = s.find('('), r = s.find(')');
      if (l == std::string::npos || r == std::string::npos || r < l) {
        throw FormatError("bad layer echo item: " + item);
      }
      std::vector<int> args;
      std::string cur;
      for (std::size_t i = l + 1; i <= r; ++i) {
        if (s[i] == ',' || s[i] == ')') {
          args.push_back(std::stoi(cur));
          cur.clear();
        } else {
          cur.push_back(s[i]);
        }
      }
      return args;
    };
    if (item == "input") {
      a.layers.push_back({LayerKind::input});
    } else if (item.rfind("conv(", 0) == 0) {
      const auto args = args_of(item);
      if (args.size() != 2) throw FormatError("bad conv echo: " + item);
      a.layers.push_back({LayerKind::conv, args[0], args[1], 0, 0});
    } else if (item == "relu") {
      a.layers.push_back({LayerKind::relu});
    } else if (item.rfind("maxpool(", 0) == 0) {
      const auto args = args_of(item);
      if (args.size() != 1) throw FormatError("bad maxpool echo: " + item);
      a.layers.push_back({LayerKind::maxpool, 0, 0, args[0], 0});
    } else if (item.rfind("fc(", 0) == 0) {
      const auto args = args_of(item);
      if (args.size() != 1) throw FormatError("bad fc echo: " + item);
      a.layers.push_back({LayerKind::fc, 0, 0, 0, args[0]});
    } else if (item == "softmax") {
      a.layers.push_back({LayerKind::softmax});
    } else if (item == "classification") {
      a.layers.push_back({LayerKind::classification});
    } else {
      throw FormatError("unknown layer echo item: " + item);
    }
  }
  a.infer_shapes();
  return a;
}

inline CnnNetwork scnn_from_container(const ModelContainer& c) {
  if (c.kind != "scnn") throw FormatError("container kind is not scnn: " + c.kind);
  CnnNetwork net;
  net.arch = architecture_from_layer_echo(c.meta_value("layers"),
                                          std::stoi(c.meta_value("input_size")));
  net.slots = detail::make_slots(net.arch);
  std::size_t total = 0;
  for (const auto& s : net.slots) total = std::max(total, s.offset + s.count());
  net.params.assign(total, 0.0);
  net.velocity.assign(total, 0.0);
  for (const ParamSlot& s : net.slots) {
    const TensorBlob& t = c.tensor(s.name);
    if (t.dims.size() != s.dims.size() || t.count() != s.count()) {
      throw FormatError("tensor shape mismatch for " + s.name);
    }
    for (std::size_t d = 0; d < s.dims.size(); ++d) {
      if (t.dims[d] != s.dims[d]) throw FormatError("tensor shape mismatch for " + s.name);
    }
    for (std::size_t i = 0; i < s.count(); ++i) {
      net.params[s.offset + i] = static_cast<double>(t.data[i]);
    }
  }
  return net;
}

// ---- H-ELM ----

inline ModelContainer to_container(const HelmModel& m) {
  if (!m.trained()) throw StateError("to_container: helm model not trained");
  ModelContainer c;
  c.kind = "helm";
  c.set_meta("lambda_reg", std::to_string(m.config.lambda_reg));
  c.set_meta("l1_weight", std::to_string(m.config.l1_weight));
  c.set_meta("fista_iters", std::to_string(m.config.fista_iters));
  c.set_meta("seed", std::to_string(m.config.seed));
  c.tensors.push_back(detail::tensor_from("ae1.beta", m.ae1.beta));
  c.tensors.push_back(detail::tensor_from("ae1.scale.min", m.scale1.min));
  c.tensors.push_back(detail::tensor_from("ae1.scale.max", m.scale1.max));
  c.tensors.push_back(detail::tensor_from("ae2.beta", m.ae2.beta));
  c.tensors.push_back(detail::tensor_from("ae2.scale.min", m.scale2.min));
  c.tensors.push_back(detail::tensor_from("ae2.scale.max", m.scale2.max));
  c.tensors.push_back(detail::tensor_from("clf.W", m.classifier.layer.W));
  c.tensors.push_back(detail::tensor_from("clf.b", m.classifier.layer.b));
  c.tensors.push_back(detail::tensor_from("clf.beta", m.classifier.beta));
  return c;
}

inline HelmModel helm_from_container(const ModelContainer& c) {
  if (c.kind != "helm") throw FormatError("container kind is not helm: " + c.kind);
  HelmModel m;
  m.ae1.beta = detail::matrix_from(c.tensor("ae1.beta"));
  m.scale1.min = detail::vector_from(c.tensor("ae1.scale.min"));
  m.scale1.max = detail::vector_from(c.tensor("ae1.scale.max"));
  m.ae2.beta = detail::matrix_from(c.tensor("ae2.beta"));
  m.scale2.min = detail::vector_from(c.tensor("ae2.scale.min"));
  m.scale2.max = detail::vector_from(c.tensor("ae2.scale.max"));
  m.classifier.layer.W = detail::matrix_from(c.tensor("clf.W"));
  m.classifier.layer.b = detail::vector_from(c.tensor("clf.b"));
  m.classifier.beta = detail::matrix_from(c.tensor("clf.beta"));
  m.config.lambda_reg = std::stod(c.meta_value("lambda_reg"));
  m.config.l1_weight = std::stod(c.meta_value("l1_weight"));
  m.config.fista_iters = std::stoi(c.meta_value("fista_iters"));
  m.config.seed = std::stoull(c.meta_value("seed"));
  // W and b travel as tensors; the layer seed is re-derived, not stored
  m.classifier.layer.seed = derive_seed(m.config.seed, "helm.clf");
  m.classifier.lambda_reg = m.config.lambda_reg;
  m.config.n_ae1 = m.ae1.hidden();
  m.config.n_ae2 = m.ae2.hidden();
  m.config.n_classifier = m.classifier.layer.hidden();
  return m;
}

// ---- SVM ----

inline ModelContainer to_container(const SvmModel& m) {
  ModelContainer c;
  c.kind = "svm";
  c.set_meta("c", std::to_string(m.c));
  TensorBlob w;
  w.name = "w";
  w.dims = {static_cast<std::uint64_t>(m.w.size())};
  for (double v : m.w) w.data.push_back(static_cast<float>(v));
  c.tensors.push_back(std::move(w));
  TensorBlob b;
  b.name = "b";
  b.dims = {1};
  b.data.push_back(static_cast<float>(m.b));
  c.tensors.push_back(std::move(b));
  return c;
}

inline SvmModel svm_from_container(const ModelContainer& c) {
  if (c.kind != "svm") throw FormatError("container kind is not svm: " + c.kind);
  SvmModel m;
  m.c = std::stod(c.meta_value("c"));
  const TensorBlob& w = c.tensor("w");
  if (w.dims.size() != 1) throw FormatError("svm container: w must be a vector");
  m.w.assign(w.data.begin(), w.data.end());
  const TensorBlob& b = c.tensor("b");
  if (b.count() != 1) throw FormatError("svm container: b must be a scalar");
  m.b = static_cast<double>(b.data[0]);
  return m;
}

// ---- Patch datasets ----

inline ModelContainer to_container(const std::vector<LabeledSample>& samples,
                                   std::uint64_t seed) {
  if (samples.empty()) throw ConfigError("dataset container: no samples");
  const int ps = samples[0].patch.width;
  ModelContainer c;
  c.kind = "dataset";
  c.set_meta("patch_size", std::to_string(ps));
  c.set_meta("seed", std::to_string(seed));
  TensorBlob patches;
  patches.name = "patches";
  patches.dims = {samples.size(), static_cast<std::uint64_t>(ps), static_cast<std::uint64_t>(ps)};
  patches.data.reserve(samples.size() * static_cast<std::size_t>(ps) * ps);
  TensorBlob labels;
  labels.name = "labels";
  labels.dims = {samples.size()};
  TensorBlob persons;
  persons.name = "person_ids";
  persons.dims = {samples.size()};
  for (const LabeledSample& s : samples) {
    if (s.patch.width != ps || s.patch.height != ps) {
      throw DimensionError("dataset container: patches must share one size");
    }
    patches.data.insert(patches.data.end(), s.patch.data.begin(), s.patch.data.end());
    labels.data.push_back(static_cast<float>(s.label));
    persons.data.push_back(static_cast<float>(s.person_id));
  }
  c.tensors.push_back(std::move(patches));
  c.tensors.push_back(std::move(labels));
  c.tensors.push_back(std::move(persons));
  return c;
}

inline std::vector<LabeledSample> dataset_from_container(const ModelContainer& c) {
  if (c.kind != "dataset") throw FormatError("container kind is not dataset: " + c.kind);
  const TensorBlob& patches = c.tensor("patches");
  const TensorBlob& labels = c.tensor("labels");
  const TensorBlob& persons = c.tensor("person_ids");
  if (patches.dims.size() != 3) throw FormatError("dataset container: patches must be 3-d");
  const std::size_t n = patches.dims[0];
  const int ph = static_cast<int>(patches.dims[1]);
  const int pw = static_cast<int>(patches.dims[2]);
  if (labels.count() != n || persons.count() != n) {
    throw FormatError("dataset container: tensor row counts disagree");
  }
  std::vector<LabeledSample> out(n);
  const std::size_t stride = static_cast<std::size_t>(ph) * pw;
  for (std::size_t i = 0; i < n; ++i) {
    out[i].patch = GrayFrame(pw, ph);
    std::copy_n(patches.data.begin() + static_cast<std::ptrdiff_t>(i * stride), stride,
                out[i].patch.data.begin());
    out[i].label = static_cast<int>(labels.data[i]);
    out[i].person_id = static_cast<int>(persons.data[i]);
  }
  return out;
}

// Convenience wrappers used by the CLI; the container kind dispatches the
// classifier head. An svm container holds only the margin head, so it needs
// the feature-extractor network as a second file.
inline std::unique_ptr<PatchClassifier> classifier_from_container(
    const ModelContainer& c, const std::filesystem::path& aux = {}) {
  if (c.kind == "scnn") {
    return std::make_unique<ScnnSoftmaxClassifier>(scnn_from_container(c));
  }
  if (c.kind == "helm") {
    return std::make_unique<HelmClassifier>(helm_from_container(c));
  }
  if (c.kind == "svm") {
    if (aux.empty()) {
      throw ConfigError("svm model needs the feature-extractor scnn container (--scnn)");
    }
    const ModelContainer fc = load_container(aux);
    return std::make_unique<ScnnSvmClassifier>(scnn_from_container(fc), svm_from_container(c));
  }
  throw FormatError("no classifier for container kind: " + c.kind);
}

inline std::unique_ptr<PatchClassifier> classifier_from_file(const std::filesystem::path& model,
                                                             const std::filesystem::path& aux = {}) {
  return classifier_from_container(load_container(model), aux);
}

}  // namespace aerialdet
