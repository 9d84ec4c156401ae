#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "aerialdet/cnn.hpp"
#include "aerialdet/elm.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/svm.hpp"

namespace aerialdet {

enum class ClassifierKind { scnn_softmax, scnn_svm, helm, external_svm };

inline std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::scnn_softmax: return "scnn_softmax";
    case ClassifierKind::scnn_svm: return "scnn_svm";
    case ClassifierKind::helm: return "helm";
    case ClassifierKind::external_svm: return "external_svm";
  }
  throw ConfigError("unknown classifier kind");
}

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
  if (s == "scnn_softmax") return ClassifierKind::scnn_softmax;
  if (s == "scnn_svm") return ClassifierKind::scnn_svm;
  if (s == "helm") return ClassifierKind::helm;
  if (s == "external_svm") return ClassifierKind::external_svm;
  throw ConfigError("unknown classifier kind: " + s);
}

// Binary patch classifier head. classify returns (label, score): label 1 for
// human, score is the head's native confidence (probability, margin, or
// score difference).
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;
  virtual std::pair<int, double> classify(const GrayFrame& patch) const = 0;
  virtual int input_size() const = 0;
  virtual std::string name() const = 0;
};

class ScnnSoftmaxClassifier final : public PatchClassifier {
 public:
  explicit ScnnSoftmaxClassifier(CnnNetwork net) : net_(std::move(net)) {
    if (!net_.initialized()) throw StateError("ScnnSoftmaxClassifier: untrained network");
  }

  std::pair<int, double> classify(const GrayFrame& patch) const override {
    auto [label, probs] = scnn_predict(net_, patch);
    const double p_human = probs.size() > 1 ? probs[1] : 0.0;
    return {p_human > 0.5 ? 1 : 0, p_human};
  }

  int input_size() const override { return net_.arch.input_size; }
  std::string name() const override { return "scnn_softmax"; }
  const CnnNetwork& network() const { return net_; }

 private:
  CnnNetwork net_;
};

class ScnnSvmClassifier final : public PatchClassifier {
 public:
  ScnnSvmClassifier(CnnNetwork net, SvmModel svm) : net_(std::move(net)), svm_(std::move(svm)) {
    if (!net_.initialized()) throw StateError("ScnnSvmClassifier: untrained network");
  }

  std::pair<int, double> classify(const GrayFrame& patch) const override {
    const std::vector<double> f = extract_fc_features(net_, patch);
    if (f.size() != svm_.w.size()) throw DimensionError("ScnnSvmClassifier: feature dim mismatch");
    double margin = svm_.b;
    for (std::size_t j = 0; j < f.size(); ++j) margin += svm_.w[j] * f[j];
    return {margin < 0.0 ? 0 : 1, margin};
  }

  int input_size() const override { return net_.arch.input_size; }
  std::string name() const override { return "scnn_svm"; }
  const CnnNetwork& network() const { return net_; }
  const SvmModel& svm() const { return svm_; }

 private:
  CnnNetwork net_;
  SvmModel svm_;
};

class HelmClassifier final : public PatchClassifier {
 public:
  explicit HelmClassifier(HelmModel model) : model_(std::move(model)) {
    if (!model_.trained()) throw StateError("HelmClassifier: untrained model");
    const int d = model_.ae1.dim();
    patch_size_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
    if (patch_size_ * patch_size_ != d) {
      throw DimensionError("HelmClassifier: input dim is not a square patch");
    }
  }

  std::pair<int, double> classify(const GrayFrame& patch) const override {
    const std::vector<const GrayFrame*> one{&patch};
    const ElmPrediction p = helm_predict(model_, one);
    const double diff = p.scores(0, 1) - p.scores(0, 0);
    return {diff > 0.0 ? 1 : 0, diff};
  }

  int input_size() const override { return patch_size_; }
  std::string name() const override { return "helm"; }
  const HelmModel& model() const { return model_; }

 private:
  HelmModel model_;
  int patch_size_ = 0;
};

}  // namespace aerialdet
