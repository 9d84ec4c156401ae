#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aerialdet/errors.hpp"
#include "aerialdet/features.hpp"
#include "aerialdet/rng.hpp"

namespace aerialdet {

struct SvmModel {
  std::vector<double> w;
  double b = 0.0;
  double c = 1.0;

  std::size_t dim() const { return w.size(); }
};

struct SvmTrainResult {
  SvmModel model;
  std::vector<std::string> warnings;
};

// Hinge objective (1/2)||w||^2 + c * sum hinge(1 - y(w.x + b)).
inline double svm_objective(const SvmModel& m, const FeatureMatrix& feats,
                            const std::vector<int>& labels) {
  if (feats.rows != labels.size()) throw DimensionError("svm_objective: label count mismatch");
  if (feats.dim != m.w.size()) throw DimensionError("svm_objective: dim mismatch");
  double obj = 0.0;
  for (double wi : m.w) obj += wi * wi;
  obj *= 0.5;
  for (std::size_t r = 0; r < feats.rows; ++r) {
    double margin = m.b;
    for (std::size_t j = 0; j < feats.dim; ++j) margin += m.w[j] * feats.at(r, j);
    const double hinge = 1.0 - labels[r] * margin;
    if (hinge > 0.0) obj += m.c * hinge;
  }
  return obj;
}

// Stochastic subgradient descent on the hinge objective in its scaled form
// lambda/2 ||w||^2 + mean hinge with lambda = 1/(c*n) and step 1/(lambda*t).
// The bias rides along as an augmented constant feature. Returns the average
// of the last half of the iterates.
inline SvmTrainResult train_linear_svm(const FeatureMatrix& feats, const std::vector<int>& labels,
                                       double c, int epochs, std::uint64_t seed) {
  feats.validate();
  if (!(c > 0.0)) throw ConfigError("train_linear_svm: c must be > 0");
  if (epochs < 1) throw ConfigError("train_linear_svm: epochs must be >= 1");
  if (feats.rows != labels.size()) throw DimensionError("train_linear_svm: label count mismatch");
  if (feats.rows == 0) throw ConfigError("train_linear_svm: empty training set");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw ConfigError("train_linear_svm: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw ConfigError("train_linear_svm: both classes required");

  SvmTrainResult res;
  bool all_identical = true;
  for (std::size_t r = 1; r < feats.rows && all_identical; ++r) {
    for (std::size_t j = 0; j < feats.dim; ++j) {
      if (feats.at(r, j) != feats.at(0, j)) {
        all_identical = false;
        break;
      }
    }
  }
  if (all_identical) {
    res.warnings.push_back("all feature rows identical with mixed labels; data is not separable");
  }

  const std::size_t n = feats.rows;
  const std::size_t d = feats.dim + 1;  // trailing constant-1 bias feature
  const double lambda = 1.0 / (c * static_cast<double>(n));
  std::vector<double> w(d, 0.0), w_avg(d, 0.0);
  Rng rng(derive_seed(seed, "svm.order"));
  const std::uint64_t total = static_cast<std::uint64_t>(epochs) * n;
  const std::uint64_t avg_from = total - total / 2 + 1;  // last half of iterations
  std::uint64_t averaged = 0;
  for (std::uint64_t t = 1; t <= total; ++t) {
    const std::size_t i = static_cast<std::size_t>(rng.uniform_index(n));
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    double margin = w[d - 1];
    for (std::size_t j = 0; j < feats.dim; ++j) margin += w[j] * feats.at(i, j);
    const double y = labels[i];
    const double shrink = 1.0 - 1.0 / static_cast<double>(t);  // 1 - eta*lambda
    for (double& wj : w) wj *= shrink;
    if (y * margin < 1.0) {
      const double step = eta * y;
      for (std::size_t j = 0; j < feats.dim; ++j) w[j] += step * feats.at(i, j);
      w[d - 1] += step;
    }
    if (t >= avg_from) {
      for (std::size_t j = 0; j < d; ++j) w_avg[j] += w[j];
      ++averaged;
    }
  }
  for (double& wj : w_avg) wj /= static_cast<double>(averaged);

  res.model.c = c;
  res.model.b = static_cast<double>(static_cast<float>(w_avg[d - 1]));
  res.model.w.resize(feats.dim);
  for (std::size_t j = 0; j < feats.dim; ++j) {
    res.model.w[j] = static_cast<double>(static_cast<float>(w_avg[j]));
  }
  return res;
}

inline double svm_margin(const SvmModel& m, const float* x, std::size_t dim) {
  if (dim != m.w.size()) throw DimensionError("svm_margin: dim mismatch");
  double margin = m.b;
  for (std::size_t j = 0; j < dim; ++j) margin += m.w[j] * x[j];
  return margin;
}

struct SvmPrediction {
  std::vector<int> labels;      // +1 / -1, zero margin counts as +1
  std::vector<double> margins;  // w.x + b
};

inline SvmPrediction svm_predict(const SvmModel& m, const FeatureMatrix& feats) {
  if (feats.dim != m.w.size()) throw DimensionError("svm_predict: dim mismatch");
  SvmPrediction p;
  p.labels.resize(feats.rows);
  p.margins.resize(feats.rows);
  for (std::size_t r = 0; r < feats.rows; ++r) {
    const double margin = svm_margin(m, feats.data.data() + r * feats.dim, feats.dim);
    p.margins[r] = margin;
    p.labels[r] = margin < 0.0 ? -1 : 1;
  }
  return p;
}

}  // namespace aerialdet
