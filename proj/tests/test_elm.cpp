#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "aerialdet/elm.hpp"
#include "aerialdet/rng.hpp"

using namespace aerialdet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
  return m;
}

// Plain Gauss-Jordan with partial pivoting; deliberately avoids every Eigen
// decomposition so it can stand as an oracle for the ridge solve.
MatrixXd gauss_jordan_solve(MatrixXd a, MatrixXd rhs) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    a.row(col).swap(a.row(pivot));
    rhs.row(col).swap(rhs.row(pivot));
    const double p = a(col, col);
    a.row(col) /= p;
    rhs.row(col) /= p;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f != 0.0) {
        a.row(r) -= f * a.row(col);
        rhs.row(r) -= f * rhs.row(col);
      }
    }
  }
  return rhs;
}

// Ridge normal equations solved the long way: (U^T U + I/lambda) beta = U^T T.
MatrixXd ridge_oracle(const MatrixXd& U, const MatrixXd& T, double lambda_reg) {
  MatrixXd gram = U.transpose() * U;
  gram.diagonal().array() += 1.0 / lambda_reg;
  return gauss_jordan_solve(gram, U.transpose() * T);
}

MatrixXd ista_solve(const MatrixXd& H, const MatrixXd& X, double l1, int iters) {
  MatrixXd B = MatrixXd::Zero(H.cols(), X.cols());
  const double lmax = largest_gram_eigenvalue(H);
  const double step = 1.0 / lmax;
  const double shrink = step * l1 / 2.0;
  for (int k = 0; k < iters; ++k) {
    MatrixXd G = B - step * (H.transpose() * (H * B - X));
    soft_threshold_inplace(G, shrink);
    B = std::move(G);
  }
  return B;
}

std::vector<LabeledSample> brightness_dataset(int size, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSample> data;
  for (int i = 0; i < n; ++i) {
    LabeledSample s;
    s.label = i % 2;
    s.person_id = 1 + i % 12;
    const double base = s.label == 1 ? 0.85 : 0.15;
    s.patch = GrayFrame(size, size);
    for (float& v : s.patch.data) {
      v = static_cast<float>(std::clamp(base + 0.08 * (rng.uniform() - 0.5), 0.0, 1.0));
    }
    data.push_back(std::move(s));
  }
  return data;
}

}  // namespace

TEST_CASE("sigmoid is stable and symmetric", "[elm]") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(sigmoid(-800.0) == Catch::Approx(0.0).margin(1e-12));
  // absolute margin: near z = 25 the 1 - sigmoid(z) side cancels to ~1e-11
  // and keeps only ~1e-16 absolute precision
  for (double z : {0.1, 1.0, 3.7, 25.0}) {
    CHECK(sigmoid(-z) == Catch::Approx(1.0 - sigmoid(z)).margin(1e-12));
  }
}

TEST_CASE("random layers are seeded, bounded and reproducible", "[elm]") {
  const RandomLayer a = RandomLayer::make(7, 5, 99);
  REQUIRE(a.hidden() == 7);
  REQUIRE(a.dim() == 5);
  for (Eigen::Index i = 0; i < a.W.size(); ++i) {
    CHECK(a.W.data()[i] >= -1.0);
    CHECK(a.W.data()[i] <= 1.0);
  }
  const RandomLayer b = RandomLayer::make(7, 5, 99);
  CHECK(a.W == b.W);
  CHECK(a.b == b.b);
  const RandomLayer c = RandomLayer::make(7, 5, 100);
  CHECK(a.W != c.W);
  CHECK_THROWS_AS(RandomLayer::make(0, 5, 1), ConfigError);
}

TEST_CASE("hidden output matches the elementwise definition", "[elm]") {
  const RandomLayer layer = RandomLayer::make(3, 4, 12);
  const MatrixXd X = random_matrix(5, 4, 13);
  const MatrixXd U = random_hidden_output(layer, X);
  REQUIRE(U.rows() == 5);
  REQUIRE(U.cols() == 3);
  for (Eigen::Index n = 0; n < 5; ++n) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      double z = layer.b(i);
      for (Eigen::Index j = 0; j < 4; ++j) z += layer.W(i, j) * X(n, j);
      CHECK(U(n, i) == Catch::Approx(sigmoid(z)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(random_hidden_output(layer, random_matrix(5, 3, 1)), DimensionError);
}

TEST_CASE("ridge solve matches an independent dense solver on both regimes", "[elm]") {
  for (int t = 0; t < 20; ++t) {
    const bool wide = t % 2 == 0;  // N < L exercises the dual path
    const Eigen::Index n = wide ? 8 + t : 30 + t;
    const Eigen::Index l = wide ? 20 + t : 10 + t % 6;
    const MatrixXd U = random_matrix(n, l, 500 + static_cast<std::uint64_t>(t));
    const MatrixXd T = random_matrix(n, 2, 900 + static_cast<std::uint64_t>(t));
    const double lambda_reg = t % 3 == 0 ? 1.0 : 100.0;
    const MatrixXd beta = elm_train(U, T, lambda_reg);
    const MatrixXd want = ridge_oracle(U, T, lambda_reg);
    REQUIRE(beta.rows() == l);
    REQUIRE(beta.cols() == 2);
    const double rel = (beta - want).norm() / want.norm();
    CHECK(rel < 1e-8);
  }
}

TEST_CASE("identity hidden output with weak regularization reproduces targets", "[elm]") {
  const MatrixXd U = MatrixXd::Identity(6, 6);
  const MatrixXd T = random_matrix(6, 2, 44);
  const MatrixXd beta = elm_train(U, T, 1e9);
  CHECK((beta - T).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ridge solve validates its inputs", "[elm]") {
  const MatrixXd U = random_matrix(4, 3, 1);
  const MatrixXd T = random_matrix(4, 2, 2);
  CHECK_THROWS_AS(elm_train(U, T, 0.0), ConfigError);
  CHECK_THROWS_AS(elm_train(U, T, -1.0), ConfigError);
  CHECK_THROWS_AS(elm_train(U, random_matrix(5, 2, 3), 1.0), DimensionError);
  MatrixXd bad = U;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(elm_train(bad, T, 1.0), NumericError);
}

TEST_CASE("elm predictions take the argmax score", "[elm]") {
  ElmModel model;
  model.layer = RandomLayer::make(6, 3, 7);
  model.lambda_reg = 10.0;
  const MatrixXd X = random_matrix(12, 3, 8);
  const MatrixXd U = random_hidden_output(model.layer, X);
  MatrixXd T = MatrixXd::Zero(12, 2);
  for (int i = 0; i < 12; ++i) T(i, i % 2) = 1.0;
  model.beta = elm_train(U, T, model.lambda_reg);
  const ElmPrediction p = elm_predict(model, X);
  REQUIRE(p.labels.size() == 12);
  const MatrixXd scores = U * model.beta;
  for (int i = 0; i < 12; ++i) {
    const int want = scores(i, 1) > scores(i, 0) ? 1 : 0;
    CHECK(p.labels[static_cast<std::size_t>(i)] == want);
    CHECK(p.scores(i, 0) == Catch::Approx(scores(i, 0)).epsilon(1e-12));
  }
  ElmModel untrained;
  untrained.layer = model.layer;
  CHECK_THROWS_AS(elm_predict(untrained, X), StateError);
}

TEST_CASE("power iteration finds the top gram eigenvalue", "[elm]") {
  MatrixXd H = MatrixXd::Zero(4, 3);
  H(0, 0) = 2.0;
  H(1, 1) = 1.0;
  H(2, 2) = 0.5;
  CHECK(largest_gram_eigenvalue(H) == Catch::Approx(4.0).epsilon(1e-9));
  const MatrixXd R = random_matrix(15, 9, 3);
  const double got = largest_gram_eigenvalue(R);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(R.transpose() * R);
  CHECK(got == Catch::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
  CHECK(largest_gram_eigenvalue(MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("soft threshold clamps the dead zone and shifts the rest", "[elm]") {
  MatrixXd B(1, 5);
  B << -2.0, -0.3, 0.0, 0.3, 2.0;
  soft_threshold_inplace(B, 0.5);
  CHECK(B(0, 0) == -1.5);
  CHECK(B(0, 1) == 0.0);
  CHECK(B(0, 2) == 0.0);
  CHECK(B(0, 3) == 0.0);
  CHECK(B(0, 4) == 1.5);
}

TEST_CASE("fista on an orthonormal dictionary equals the soft-threshold closed form", "[elm]") {
  // identity dictionary
  {
    const MatrixXd H = MatrixXd::Identity(6, 6);
    const MatrixXd X = random_matrix(6, 3, 21);
    const double l1 = 0.4;
    const MatrixXd B = fista_solve(H, X, l1, 30);
    MatrixXd want = H.transpose() * X;
    soft_threshold_inplace(want, l1 / 2.0);
    CHECK((B - want).cwiseAbs().maxCoeff() < 1e-6);
  }
  // Householder reflection, orthonormal but dense
  {
    Rng rng(5);
    VectorXd u(8);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.gaussian();
    const MatrixXd Q = MatrixXd::Identity(8, 8) - 2.0 * (u * u.transpose()) / u.squaredNorm();
    const MatrixXd X = random_matrix(8, 4, 22);
    const double l1 = 0.3;
    const MatrixXd B = fista_solve(Q, X, l1, 30);
    MatrixXd want = Q.transpose() * X;
    soft_threshold_inplace(want, l1 / 2.0);
    CHECK((B - want).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("fista reaches a lower objective than ista at equal iterations", "[elm]") {
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index n = 12 + t, l = 8 + t % 5, d = 6 + t % 4;
    const MatrixXd H = random_matrix(n, l, 1000 + static_cast<std::uint64_t>(t));
    const MatrixXd X = random_matrix(n, d, 2000 + static_cast<std::uint64_t>(t));
    const double l1 = 0.05 + 0.1 * (t % 3);
    const int iters = 30;
    const MatrixXd bf = fista_solve(H, X, l1, iters);
    const MatrixXd bi = ista_solve(H, X, l1, iters);
    CHECK(lasso_objective(H, X, bf, l1) <= lasso_objective(H, X, bi, l1) + 1e-9);
  }
}

TEST_CASE("converged fista solutions satisfy the lasso stationarity conditions", "[elm]") {
  const MatrixXd H = random_matrix(20, 10, 77);
  const MatrixXd X = random_matrix(20, 5, 78);
  const double l1 = 0.2;
  const MatrixXd B = fista_solve(H, X, l1, 300);
  const MatrixXd G = 2.0 * H.transpose() * (H * B - X);
  for (Eigen::Index i = 0; i < B.size(); ++i) {
    const double b = B.data()[i], g = G.data()[i];
    if (b != 0.0) {
      CHECK(std::abs(g + l1 * (b > 0.0 ? 1.0 : -1.0)) < 1e-3);
    } else {
      CHECK(std::abs(g) <= l1 + 1e-3);
    }
  }
}

TEST_CASE("fista validates its inputs", "[elm]") {
  const MatrixXd H = random_matrix(4, 3, 1);
  const MatrixXd X = random_matrix(4, 2, 2);
  CHECK_THROWS_AS(fista_solve(H, X, 0.1, 0), ConfigError);
  CHECK_THROWS_AS(fista_solve(H, X, -0.1, 10), ConfigError);
  CHECK_THROWS_AS(fista_solve(H, random_matrix(5, 2, 3), 0.1, 10), DimensionError);
}

TEST_CASE("autoencoder training beats the zero code on its own objective", "[elm]") {
  const MatrixXd X = random_matrix(30, 12, 55);
  const SparseAutoencoder ae = train_sparse_autoencoder(X, 9, 0.01, 60, 3);
  REQUIRE(ae.hidden() == 9);
  REQUIRE(ae.dim() == 12);
  const RandomLayer layer = RandomLayer::make(9, 12, 3);
  const MatrixXd U = random_hidden_output(layer, X);
  CHECK(lasso_objective(U, X, ae.beta, 0.01) <
        lasso_objective(U, X, MatrixXd::Zero(9, 12), 0.01));
  const MatrixXd enc = ae.encode(X);
  CHECK(enc.rows() == 30);
  CHECK(enc.cols() == 9);
  CHECK_THROWS_AS(ae.encode(random_matrix(3, 5, 1)), DimensionError);
}

TEST_CASE("feature scaling maps training extremes onto [-1,1]", "[elm]") {
  MatrixXd F(3, 3);
  F << 0.0, 10.0, 5.0,
       2.0, 20.0, 5.0,
       4.0, 15.0, 5.0;
  const FeatureScale s = FeatureScale::fit(F);
  const MatrixXd out = s.apply(F);
  CHECK(out(0, 0) == Catch::Approx(-1.0));
  CHECK(out(2, 0) == Catch::Approx(1.0));
  CHECK(out(1, 0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(out(0, 1) == Catch::Approx(-1.0));
  CHECK(out(1, 1) == Catch::Approx(1.0));
  // constant training column maps to zero even for new values
  MatrixXd fresh(1, 3);
  fresh << 3.0, 12.0, 99.0;
  CHECK(s.apply(fresh)(0, 2) == 0.0);
  CHECK_THROWS_AS(s.apply(random_matrix(2, 4, 1)), DimensionError);
}

TEST_CASE("helm stacks two autoencoders under a wide elm head", "[elm]") {
  const auto train = brightness_dataset(8, 40, 321);
  const auto test = brightness_dataset(8, 20, 654);
  HelmConfig cfg;
  cfg.n_ae1 = 32;
  cfg.n_ae2 = 32;
  cfg.n_classifier = 128;
  cfg.fista_iters = 30;
  cfg.lambda_reg = 100.0;
  cfg.seed = 11;
  const HelmTrainResult r = helm_train(train, cfg);
  REQUIRE(r.warnings.empty());
  REQUIRE(r.model.trained());
  CHECK(r.model.layer_sizes() == std::vector<int>{64, 32, 32, 128, 2});

  std::vector<const GrayFrame*> patches;
  for (const auto& s : test) patches.push_back(&s.patch);
  const ElmPrediction p = helm_predict(r.model, patches);
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (p.labels[i] == test[i].label) ++correct;
  }
  CHECK(correct == static_cast<int>(test.size()));

  const HelmTrainResult again = helm_train(train, cfg);
  CHECK(again.model.ae1.beta == r.model.ae1.beta);
  CHECK(again.model.classifier.beta == r.model.classifier.beta);

  // every stored tensor survives an f32 round trip unchanged
  for (const MatrixXd* m : {&r.model.ae1.beta, &r.model.ae2.beta, &r.model.classifier.beta,
                            &r.model.classifier.layer.W}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      const double v = m->data()[i];
      CHECK(v == static_cast<double>(static_cast<float>(v)));
    }
  }
}

TEST_CASE("helm validates configuration and state", "[elm]") {
  HelmConfig cfg;
  cfg.n_ae1 = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = HelmConfig{};
  cfg.lambda_reg = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = HelmConfig{};
  cfg.fista_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK_THROWS_AS(helm_train({}, HelmConfig{}), ConfigError);

  const HelmModel blank;
  CHECK_THROWS_AS(helm_predict(blank, MatrixXd::Zero(1, 4)), StateError);

  auto single = brightness_dataset(6, 6, 9);
  for (auto& s : single) s.label = 1;
  HelmConfig small;
  small.n_ae1 = 8;
  small.n_ae2 = 8;
  small.n_classifier = 16;
  small.fista_iters = 5;
  const HelmTrainResult r = helm_train(single, small);
  CHECK_FALSE(r.warnings.empty());
}
