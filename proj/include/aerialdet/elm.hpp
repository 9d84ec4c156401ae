#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aerialdet/errors.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/sample.hpp"

namespace aerialdet {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Fixed random projection: entries of W and b drawn uniform in [-1,1] from
// the seed, W filled row by row, then b.
struct RandomLayer {
  Eigen::MatrixXd W;  // L x d
  Eigen::VectorXd b;  // L
  std::uint64_t seed = 0;

  static RandomLayer make(int n_hidden, int dim, std::uint64_t seed) {
    if (n_hidden < 1 || dim < 1) throw ConfigError("RandomLayer: sizes must be >= 1");
    RandomLayer layer;
    layer.seed = seed;
    layer.W.resize(n_hidden, dim);
    layer.b.resize(n_hidden);
    Rng rng(seed);
    for (int i = 0; i < n_hidden; ++i) {
      for (int j = 0; j < dim; ++j) layer.W(i, j) = rng.uniform(-1.0, 1.0);
    }
    for (int i = 0; i < n_hidden; ++i) layer.b(i) = rng.uniform(-1.0, 1.0);
    return layer;
  }

  int hidden() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
};

// U[n][i] = sigmoid(W_i . x_n + b_i)
inline Eigen::MatrixXd random_hidden_output(const RandomLayer& layer, const Eigen::MatrixXd& X) {
  if (X.cols() != layer.W.cols()) throw DimensionError("random_hidden_output: dim mismatch");
  Eigen::MatrixXd U = X * layer.W.transpose();
  U.rowwise() += layer.b.transpose();
  for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = sigmoid(U.data()[i]);
  return U;
}

// Ridge output weights. Whichever Gram matrix is smaller gets inverted:
//   N <= L:  beta = U^T (I/lambda + U U^T)^-1 T
//   N  > L:  beta = (I/lambda + U^T U)^-1 U^T T
// Both are the same ridge solution.
inline Eigen::MatrixXd elm_train(const Eigen::MatrixXd& U, const Eigen::MatrixXd& T,
                                 double lambda_reg) {
  if (!(lambda_reg > 0.0)) throw ConfigError("elm_train: lambda_reg must be > 0");
  if (U.rows() != T.rows()) throw DimensionError("elm_train: U and T row counts differ");
  if (!U.allFinite() || !T.allFinite()) throw NumericError("elm_train: non-finite inputs");
  const Eigen::Index n = U.rows(), l = U.cols();
  Eigen::MatrixXd beta;
  if (n <= l) {
    Eigen::MatrixXd gram = U * U.transpose();
    gram.diagonal().array() += 1.0 / lambda_reg;
    beta = U.transpose() * gram.ldlt().solve(T);
  } else {
    Eigen::MatrixXd gram = U.transpose() * U;
    gram.diagonal().array() += 1.0 / lambda_reg;
    beta = gram.ldlt().solve(U.transpose() * T);
  }
  if (!beta.allFinite()) throw NumericError("elm_train: solve produced non-finite beta");
  return beta;
}

struct ElmModel {
  RandomLayer layer;
  Eigen::MatrixXd beta;  // L x k
  double lambda_reg = 0.0;
};

struct ElmPrediction {
  Eigen::MatrixXd scores;   // N x k
  std::vector<int> labels;  // argmax per row, ties to the lower index
};

inline ElmPrediction elm_predict(const ElmModel& model, const Eigen::MatrixXd& X) {
  if (model.beta.size() == 0) throw StateError("elm_predict: model not trained");
  const Eigen::MatrixXd U = random_hidden_output(model.layer, X);
  if (U.cols() != model.beta.rows()) throw DimensionError("elm_predict: beta dim mismatch");
  ElmPrediction p;
  p.scores = U * model.beta;
  p.labels.resize(static_cast<std::size_t>(p.scores.rows()));
  for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < p.scores.cols(); ++j) {
      if (p.scores(i, j) > p.scores(i, best)) best = static_cast<int>(j);
    }
    p.labels[static_cast<std::size_t>(i)] = best;
  }
  return p;
}

// Largest eigenvalue of H^T H, matrix-free power iteration from a fixed
// seeded start vector.
inline double largest_gram_eigenvalue(const Eigen::MatrixXd& H, int steps = 100) {
  if (H.size() == 0 || H.isZero(0.0)) return 0.0;
  Rng rng(derive_seed(0, "fista.power"));
  Eigen::VectorXd v(H.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
  double norm = v.norm();
  if (norm == 0.0) v.setOnes(), norm = v.norm();
  v /= norm;
  double lmax = 0.0;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd w = H.transpose() * (H * v);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    lmax = v.dot(w);
    v = w / wn;
  }
  return lmax;
}

inline void soft_threshold_inplace(Eigen::MatrixXd& B, double t) {
  for (Eigen::Index i = 0; i < B.size(); ++i) {
    double& x = B.data()[i];
    if (x > t) {
      x -= t;
    } else if (x < -t) {
      x += t;
    } else {
      x = 0.0;
    }
  }
}

// The l1-regularized reconstruction objective ||H B - X||_F^2 + l1 ||B||_1.
inline double lasso_objective(const Eigen::MatrixXd& H, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& B, double l1_weight) {
  return (H * B - X).squaredNorm() + l1_weight * B.cwiseAbs().sum();
}

// FISTA on the equivalent objective 0.5||HB - X||_F^2 + (l1/2)||B||_1, whose
// gradient Lipschitz constant is exactly lmax(H^T H), so the step is 1/lmax
// and the proximal shrinkage is step*l1/2. Same minimizer as lasso_objective.
inline Eigen::MatrixXd fista_solve(const Eigen::MatrixXd& H, const Eigen::MatrixXd& X,
                                   double l1_weight, int iters) {
  if (iters < 1) throw ConfigError("fista_solve: iters must be >= 1");
  if (l1_weight < 0.0) throw ConfigError("fista_solve: l1_weight must be >= 0");
  if (H.rows() != X.rows()) throw DimensionError("fista_solve: row count mismatch");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(H.cols(), X.cols());
  const double lmax = largest_gram_eigenvalue(H);
  if (lmax <= 0.0) return B;  // all-zero dictionary
  const double step = 1.0 / lmax;
  const double shrink = step * l1_weight / 2.0;
  Eigen::MatrixXd Y = B, B_prev = B;
  double t = 1.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::MatrixXd G = Y - step * (H.transpose() * (H * Y - X));
    soft_threshold_inplace(G, shrink);
    B_prev.swap(B);
    B = std::move(G);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    Y = B + ((t - 1.0) / t_next) * (B - B_prev);
    t = t_next;
  }
  return B;
}

// Learned encoder: beta is n_hidden x d, encoding of rows X' is X' beta^T.
struct SparseAutoencoder {
  Eigen::MatrixXd beta;
  double l1_weight = 0.0;
  int fista_iters = 0;

  Eigen::MatrixXd encode(const Eigen::MatrixXd& X) const {
    if (X.cols() != beta.cols()) throw DimensionError("SparseAutoencoder: input dim mismatch");
    return X * beta.transpose();
  }

  int hidden() const { return static_cast<int>(beta.rows()); }
  int dim() const { return static_cast<int>(beta.cols()); }
};

inline SparseAutoencoder train_sparse_autoencoder(const Eigen::MatrixXd& X, int n_hidden,
                                                  double l1_weight, int fista_iters,
                                                  std::uint64_t seed) {
  if (X.rows() < 1) throw DimensionError("train_sparse_autoencoder: need at least one sample");
  const RandomLayer layer = RandomLayer::make(n_hidden, static_cast<int>(X.cols()), seed);
  const Eigen::MatrixXd U = random_hidden_output(layer, X);
  SparseAutoencoder ae;
  ae.l1_weight = l1_weight;
  ae.fista_iters = fista_iters;
  ae.beta = fista_solve(U, X, l1_weight, fista_iters);  // n_hidden x d
  return ae;
}

// Per-feature affine map onto [-1,1] from the stored training min/max.
struct FeatureScale {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  static FeatureScale fit(const Eigen::MatrixXd& F) {
    FeatureScale s;
    s.min = F.colwise().minCoeff();
    s.max = F.colwise().maxCoeff();
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& F) const {
    if (F.cols() != min.size()) throw DimensionError("FeatureScale: dim mismatch");
    Eigen::MatrixXd out(F.rows(), F.cols());
    for (Eigen::Index j = 0; j < F.cols(); ++j) {
      const double lo = min(j), hi = max(j);
      if (hi > lo) {
        out.col(j) = (F.col(j).array() - lo) * (2.0 / (hi - lo)) - 1.0;
      } else {
        out.col(j).setZero();  // constant training feature carries no signal
      }
    }
    return out;
  }
};

struct HelmConfig {
  int n_ae1 = 1000;
  int n_ae2 = 1000;
  int n_classifier = 12000;
  double l1_weight = 1e-3;
  int fista_iters = 50;
  double lambda_reg = 100.0;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_ae1 < 1 || n_ae2 < 1 || n_classifier < 1) {
      throw ConfigError("HelmConfig: layer sizes must be >= 1");
    }
    if (l1_weight < 0.0) throw ConfigError("HelmConfig: l1_weight must be >= 0");
    if (fista_iters < 1) throw ConfigError("HelmConfig: fista_iters must be >= 1");
    if (!(lambda_reg > 0.0)) throw ConfigError("HelmConfig: lambda_reg must be > 0");
  }
};

// Two stacked sparse autoencoders feeding a wide ELM classifier.
struct HelmModel {
  SparseAutoencoder ae1, ae2;
  FeatureScale scale1, scale2;
  ElmModel classifier;
  HelmConfig config;

  bool trained() const { return classifier.beta.size() != 0; }

  // {input dim, ae1 hidden, ae2 hidden, classifier hidden, classes}
  std::vector<int> layer_sizes() const {
    return {ae1.dim(), ae1.hidden(), ae2.hidden(), classifier.layer.hidden(),
            static_cast<int>(classifier.beta.cols())};
  }
};

namespace detail {

inline Eigen::MatrixXd flatten_patches(const std::vector<const GrayFrame*>& patches) {
  if (patches.empty()) throw DimensionError("flatten_patches: empty input");
  const std::size_t d = patches[0]->data.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(patches.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i]->data.size() != d) throw DimensionError("flatten_patches: patch size mismatch");
    for (std::size_t j = 0; j < d; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = patches[i]->data[j];
    }
  }
  return X;
}

inline void quantize_f32(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

inline void quantize_f32(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v.data()[i] = static_cast<double>(static_cast<float>(v.data()[i]));
  }
}

}  // namespace detail

struct HelmTrainResult {
  HelmModel model;
  std::vector<std::string> warnings;
};

inline HelmTrainResult helm_train(const std::vector<LabeledSample>& data, const HelmConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ConfigError("helm_train: empty training set");
  HelmTrainResult res;
  bool has_pos = false, has_neg = false;
  std::vector<const GrayFrame*> patches;
  patches.reserve(data.size());
  for (const auto& s : data) {
    patches.push_back(&s.patch);
    (s.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    res.warnings.push_back("training data contains a single class; model will be degenerate");
  }
  const Eigen::MatrixXd X = detail::flatten_patches(patches);

  HelmModel& m = res.model;
  m.config = cfg;
  m.ae1 = train_sparse_autoencoder(X, cfg.n_ae1, cfg.l1_weight, cfg.fista_iters,
                                   derive_seed(cfg.seed, "helm.ae1"));
  Eigen::MatrixXd f1 = m.ae1.encode(X);
  m.scale1 = FeatureScale::fit(f1);
  f1 = m.scale1.apply(f1);

  m.ae2 = train_sparse_autoencoder(f1, cfg.n_ae2, cfg.l1_weight, cfg.fista_iters,
                                   derive_seed(cfg.seed, "helm.ae2"));
  Eigen::MatrixXd f2 = m.ae2.encode(f1);
  m.scale2 = FeatureScale::fit(f2);
  f2 = m.scale2.apply(f2);

  m.classifier.layer = RandomLayer::make(cfg.n_classifier, static_cast<int>(f2.cols()),
                                         derive_seed(cfg.seed, "helm.clf"));
  m.classifier.lambda_reg = cfg.lambda_reg;
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(X.rows(), 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    targets(static_cast<Eigen::Index>(i), data[i].label == 1 ? 1 : 0) = 1.0;
  }
  const Eigen::MatrixXd U = random_hidden_output(m.classifier.layer, f2);
  m.classifier.beta = elm_train(U, targets, cfg.lambda_reg);

  // Round every stored tensor through f32 so the serialized model predicts
  // exactly like this one.
  detail::quantize_f32(m.ae1.beta);
  detail::quantize_f32(m.ae2.beta);
  detail::quantize_f32(m.scale1.min);
  detail::quantize_f32(m.scale1.max);
  detail::quantize_f32(m.scale2.min);
  detail::quantize_f32(m.scale2.max);
  detail::quantize_f32(m.classifier.layer.W);
  detail::quantize_f32(m.classifier.layer.b);
  detail::quantize_f32(m.classifier.beta);
  return res;
}

inline ElmPrediction helm_predict(const HelmModel& model, const Eigen::MatrixXd& X) {
  if (!model.trained()) throw StateError("helm_predict: model not trained");
  const Eigen::MatrixXd f1 = model.scale1.apply(model.ae1.encode(X));
  const Eigen::MatrixXd f2 = model.scale2.apply(model.ae2.encode(f1));
  return elm_predict(model.classifier, f2);
}

inline ElmPrediction helm_predict(const HelmModel& model,
                                  const std::vector<const GrayFrame*>& patches) {
  return helm_predict(model, detail::flatten_patches(patches));
}

}  // namespace aerialdet
