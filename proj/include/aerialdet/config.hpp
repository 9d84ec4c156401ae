#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "aerialdet/classifiers.hpp"
#include "aerialdet/cnn.hpp"
#include "aerialdet/elm.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/optical_flow.hpp"
#include "aerialdet/pipeline.hpp"
#include "aerialdet/scene.hpp"

namespace aerialdet {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* doc;
};

// Every tunable has a namespaced key, a default, and one doc line. Unknown
// keys are rejected so typos fail loudly instead of silently using defaults.
inline const std::vector<ConfigKey>& config_key_registry() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "42", "master seed; all component seeds derive from it"},
      {"hs.alpha", "1.0", "optical-flow smoothness weight"},
      {"hs.max_iters", "100", "optical-flow iteration cap"},
      {"hs.tol", "1e-4", "optical-flow mean-update stop threshold"},
      {"mask.k_sigma", "1.0", "motion threshold = mean + k_sigma * std of flow magnitude"},
      {"mask.compensate_global", "true", "subtract per-frame median flow before thresholding"},
      {"morph.radius", "2", "closing structuring-element radius (0 disables)"},
      {"detect.min_area", "25", "minimum blob area in pixels"},
      {"detect.patch_size", "100", "candidate crops are resized to this square size"},
      {"detect.classifier", "scnn_softmax", "scnn_softmax | scnn_svm | helm"},
      {"scnn.input_size", "100", "network input side length"},
      {"scnn.blocks", "3", "conv/pool blocks"},
      {"scnn.maps", "20", "feature maps per conv layer"},
      {"scnn.filter", "5", "conv filter side length"},
      {"scnn.fc_units", "1000", "width of the first fully connected layer"},
      {"scnn.lr", "0.01", "SGD learning rate"},
      {"scnn.momentum", "0.9", "SGD momentum"},
      {"scnn.l2", "0.0001", "weight decay (biases exempt)"},
      {"scnn.batch_size", "300", "minibatch size"},
      {"scnn.epochs", "30", "training epochs"},
      {"scnn.init_sigma", "0.01", "gaussian init std for weights"},
      {"helm.n_ae1", "1000", "first autoencoder hidden width"},
      {"helm.n_ae2", "1000", "second autoencoder hidden width"},
      {"helm.n_classifier", "12000", "classifier hidden width"},
      {"helm.l1_weight", "0.001", "autoencoder l1 penalty"},
      {"helm.fista_iters", "50", "autoencoder solver iterations"},
      {"helm.lambda", "100", "ridge strength of the classifier layer"},
      {"svm.c", "1.0", "hinge-loss weight"},
      {"svm.epochs", "20", "passes over the feature set"},
      {"dataset.stride", "10", "frame stride when mining patches from videos"},
      {"scene.width", "160", "synthetic frame width"},
      {"scene.height", "120", "synthetic frame height"},
      {"scene.frames", "60", "synthetic frame count"},
      {"scene.pan_x", "2", "camera pan per frame, x"},
      {"scene.pan_y", "0", "camera pan per frame, y"},
      {"scene.noise_sigma", "0.01", "per-frame gaussian noise std"},
  };
  return keys;
}

class RunConfig {
 public:
  // Precedence: explicit set() (command line) > file value > registry default.
  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + " is not key=value: " +
                          trimmed);
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      require_known(key);
      file_values_[key] = value;
    }
  }

  void set(const std::string& key, const std::string& value) {
    require_known(key);
    overrides_[key] = value;
  }

  std::string get(const std::string& key) const {
    if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
    if (auto it = file_values_.find(key); it != file_values_.end()) return it->second;
    for (const ConfigKey& k : config_key_registry()) {
      if (key == k.name) return k.default_value;
    }
    throw ConfigError("unknown config key: " + key);
  }

  int get_int(const std::string& key) const {
    const std::string s = get(key);
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " expects an integer, got: " + s);
    }
  }

  double get_double(const std::string& key) const {
    const std::string s = get(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " expects a number, got: " + s);
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key " + key + " expects true/false, got: " + s);
  }

  std::uint64_t get_seed() const {
    const std::string s = get("seed");
    try {
      // stoull would wrap a negative value around instead of rejecting it
      if (s.empty() || s[0] == '-' || s[0] == '+') throw std::invalid_argument(s);
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key seed expects an unsigned integer, got: " + s);
    }
  }

  HsConfig hs() const {
    HsConfig c;
    c.alpha = get_double("hs.alpha");
    c.max_iters = get_int("hs.max_iters");
    c.tol = get_double("hs.tol");
    c.validate();
    return c;
  }

  MotionMaskConfig mask() const {
    MotionMaskConfig c;
    c.k_sigma = get_double("mask.k_sigma");
    c.compensate_global = get_bool("mask.compensate_global");
    return c;
  }

  DetectorConfig detector() const {
    DetectorConfig c;
    c.hs = hs();
    c.mask = mask();
    c.se.radius = get_int("morph.radius");
    c.min_area = get_int("detect.min_area");
    c.patch_size = get_int("detect.patch_size");
    c.classifier_kind = classifier_kind_from_string(get("detect.classifier"));
    c.validate();
    return c;
  }

  CnnArchitecture scnn_arch() const {
    return CnnArchitecture::build(get_int("scnn.input_size"), get_int("scnn.blocks"),
                                  get_int("scnn.maps"), get_int("scnn.filter"),
                                  get_int("scnn.fc_units"));
  }

  SgdConfig scnn_sgd() const {
    SgdConfig c;
    c.lr = get_double("scnn.lr");
    c.momentum = get_double("scnn.momentum");
    c.l2 = get_double("scnn.l2");
    c.batch_size = get_int("scnn.batch_size");
    c.epochs = get_int("scnn.epochs");
    c.init_sigma = get_double("scnn.init_sigma");
    c.seed = get_seed();
    c.validate();
    return c;
  }

  HelmConfig helm() const {
    HelmConfig c;
    c.n_ae1 = get_int("helm.n_ae1");
    c.n_ae2 = get_int("helm.n_ae2");
    c.n_classifier = get_int("helm.n_classifier");
    c.l1_weight = get_double("helm.l1_weight");
    c.fista_iters = get_int("helm.fista_iters");
    c.lambda_reg = get_double("helm.lambda");
    c.seed = get_seed();
    c.validate();
    return c;
  }

  // Scalar scene fields only; sprites come from the caller's preset.
  void apply_scene_keys(SceneConfig& scene) const {
    scene.width = get_int("scene.width");
    scene.height = get_int("scene.height");
    scene.n_frames = get_int("scene.frames");
    scene.pan_x = get_double("scene.pan_x");
    scene.pan_y = get_double("scene.pan_y");
    scene.noise_sigma = get_double("scene.noise_sigma");
    scene.seed = get_seed();
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static void require_known(const std::string& key) {
    for (const ConfigKey& k : config_key_registry()) {
      if (key == k.name) return;
    }
    throw ConfigError("unknown config key: " + key);
  }

  std::map<std::string, std::string> file_values_;
  std::map<std::string, std::string> overrides_;
};

}  // namespace aerialdet
