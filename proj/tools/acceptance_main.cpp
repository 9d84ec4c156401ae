// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line and
// the binary exits nonzero if any fail. Runs single-threaded so the timing
// bounds mean the same thing everywhere.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aerialdet/aerialdet.hpp"

using namespace aerialdet;
using Eigen::MatrixXd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("CRITERION %2d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename Fn>
void guarded(int n, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(n, false, std::string("unexpected exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Noise strip shifted by one pixel: every pixel of the second frame has an
// exact match one pixel to its left in the first, so brightness constancy
// holds exactly and the flow field should recover h = +1, v = 0.
std::pair<GrayFrame, GrayFrame> shifted_noise_pair(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> strip(static_cast<std::size_t>(w + 1) * h);
  for (float& v : strip) v = static_cast<float>(rng.uniform());
  GrayFrame a(w, h), b(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      a.at(x, y) = strip[static_cast<std::size_t>(y) * (w + 1) + x + 1];
      b.at(x, y) = strip[static_cast<std::size_t>(y) * (w + 1) + x];
    }
  }
  return {a, b};
}

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
  return m;
}

// Gauss-Jordan with partial pivoting; shares no code path with the library's
// ridge solver so it can act as an independent oracle.
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

MatrixXd ridge_oracle(const MatrixXd& U, const MatrixXd& T, double lambda_reg) {
  MatrixXd gram = U.transpose() * U;
  gram.diagonal().array() += 1.0 / lambda_reg;
  return gauss_jordan_solve(gram, U.transpose() * T);
}

MatrixXd ista_solve(const MatrixXd& H, const MatrixXd& X, double l1, int iters) {
  MatrixXd B = MatrixXd::Zero(H.cols(), X.cols());
  const double step = 1.0 / largest_gram_eigenvalue(H);
  const double shrink = step * l1 / 2.0;
  for (int k = 0; k < iters; ++k) {
    MatrixXd G = B - step * (H.transpose() * (H * B - X));
    soft_threshold_inplace(G, shrink);
    B = std::move(G);
  }
  return B;
}

// Worst relative error between analytic and central-difference gradients of
// the mean batch loss on a reduced network.
double gradcheck_worst(std::uint64_t seed) {
  const CnnArchitecture arch = CnnArchitecture::build(8, 1, 2, 3, 4);
  SgdConfig cfg;
  cfg.init_sigma = 0.1;
  cfg.seed = seed;
  CnnNetwork net = init_network(arch, cfg);

  Rng rng(derive_seed(seed, "accept.gradcheck"));
  Batch batch;
  for (int i = 0; i < 3; ++i) {
    GrayFrame f(8, 8);
    for (float& v : f.data) v = static_cast<float>(rng.uniform());
    batch.inputs.push_back(std::move(f));
    batch.targets.push_back(i % 2 == 0 ? std::array<double, 2>{0.0, 1.0}
                                       : std::array<double, 2>{1.0, 0.0});
  }
  std::vector<const GrayFrame*> ptrs;
  for (const GrayFrame& f : batch.inputs) ptrs.push_back(&f);

  const auto [grads, loss_sum] = batch_gradients(net, ptrs, batch.targets);
  const double n = static_cast<double>(batch.inputs.size());

  const auto mean_loss = [&](const CnnNetwork& nn) {
    const ForwardResult fr = forward(nn, batch);
    std::vector<std::vector<double>> targets;
    for (const auto& t : batch.targets) targets.push_back({t[0], t[1]});
    return cross_entropy_loss(fr.probs, targets) / n;
  };
  if (std::abs(mean_loss(net) - loss_sum / n) > 1e-12) {
    throw NumericError("gradcheck: loss paths disagree");
  }

  const double eps = 1e-5;
  double worst = 0.0;
  CnnNetwork probe = net;
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    probe.params[i] = net.params[i] + eps;
    const double up = mean_loss(probe);
    probe.params[i] = net.params[i] - eps;
    const double down = mean_loss(probe);
    probe.params[i] = net.params[i];
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grads[i]) / denom);
  }
  return worst;
}

// The synthetic evaluation scene: panning textured background, one walking
// human, one moving car.
Scene make_demo_scene(std::uint64_t seed) {
  SceneConfig sc;
  sc.width = 160;
  sc.height = 120;
  sc.n_frames = 60;
  sc.pan_x = 2.0;
  sc.noise_sigma = 0.01;
  sc.seed = seed;
  SpriteConfig human;
  human.kind = SpriteKind::human;
  human.size = 16;
  human.x0 = 20;
  human.y0 = 30;
  human.vx = 1.0;
  human.texture_seed = derive_seed(seed, "sprite.human");
  SpriteConfig car;
  car.kind = SpriteKind::car;
  car.size = 12;
  car.x0 = 120;
  car.y0 = 20;
  car.vy = 1.0;
  car.texture_seed = derive_seed(seed, "sprite.car");
  sc.sprites = {human, car};
  return generate_scene(sc);
}

// Threshold classifier used only to exercise the cross-validation plumbing.
class MeanBrightnessClassifier final : public PatchClassifier {
 public:
  std::pair<int, double> classify(const GrayFrame& patch) const override {
    double s = 0.0;
    for (float v : patch.data) s += v;
    const double m = s / static_cast<double>(patch.data.size());
    return {m > 0.5 ? 1 : 0, m};
  }
  int input_size() const override { return 8; }
  std::string name() const override { return "stub"; }
};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AERIALDET_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// --- criteria ---------------------------------------------------------------

namespace {

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto [a, b] = shifted_noise_pair(64, 64, 4242);
  HsConfig cfg;
  cfg.alpha = 1.0;
  cfg.max_iters = 500;
  cfg.tol = 0.0;
  const FlowField f = horn_schunck(a, b, cfg);
  const double elapsed = seconds_since(t0);

  const int margin = 4;
  double sh = 0.0, sv = 0.0;
  long long n = 0;
  for (int y = margin; y < f.height - margin; ++y) {
    for (int x = margin; x < f.width - margin; ++x) {
      sh += f.h[f.idx(x, y)];
      sv += std::abs(f.v[f.idx(x, y)]);
      ++n;
    }
  }
  const double mean_h = sh / static_cast<double>(n);
  const double mean_av = sv / static_cast<double>(n);
  const bool pass = mean_h >= 0.8 && mean_h <= 1.2 && mean_av < 0.2 && elapsed < 5.0;
  report(1, pass,
         fmt("1 px translation: interior mean h=%.4f (want [0.8,1.2]), mean |v|=%.4f "
             "(want <0.2), %.2f s (want <5)",
             mean_h, mean_av, elapsed));
}

void criterion_2() {
  DerivativeField d(1, 1);
  d.ix[0] = 1.0;
  d.iy[0] = 0.0;
  d.it[0] = -1.0;
  HsConfig cfg;
  cfg.alpha = 1.0;
  cfg.max_iters = 1;
  cfg.tol = 0.0;
  const FlowField f = horn_schunck(d, cfg);
  const double eh = std::abs(f.h[0] - 0.5);
  const double ev = std::abs(f.v[0]);
  report(2, eh < 1e-12 && ev < 1e-12,
         fmt("single-pixel update: |h-0.5|=%.3e, |v|=%.3e (want <1e-12)", eh, ev));
}

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed : {17u, 18u, 19u}) {
    worst = std::max(worst, gradcheck_worst(seed));
  }
  const double elapsed = seconds_since(t0);
  report(3, worst < 1e-4 && elapsed < 30.0,
         fmt("gradient check, 3 seeds: worst rel err=%.3e (want <1e-4), %.2f s (want <30)",
             worst, elapsed));
}

void criterion_4() {
  const CnnArchitecture arch = CnnArchitecture::build();
  const std::vector<int> want = {96, 48, 44, 22, 18, 9};
  const std::vector<int> got = arch.map_sizes();
  std::string sizes;
  for (int s : got) sizes += std::to_string(s) + " ";
  report(4, arch.layer_count() == 17 && got == want,
         fmt("default architecture: %d layers (want 17), map sizes %s(want 96 48 44 22 18 9)",
             arch.layer_count(), sizes.c_str()));
}

void criterion_5() {
  Rng rng(99);
  double worst_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> logits(2 + i % 7);
    for (double& v : logits) v = 100.0 * (rng.uniform() - 0.5);
    const std::vector<double> p = softmax(logits);
    double s = 0.0;
    for (double v : p) s += v;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }

  const int n = 10000;
  std::vector<std::vector<double>> probs(n, {0.5, 0.5});
  std::vector<std::vector<double>> targets;
  for (int i = 0; i < n; ++i) {
    targets.push_back(i % 2 == 0 ? std::vector<double>{0.0, 1.0}
                                 : std::vector<double>{1.0, 0.0});
  }
  const double ce = cross_entropy_loss(probs, targets);
  const double ce_err = std::abs(ce - n * std::log(2.0));
  report(5, worst_sum <= 1e-9 && ce_err <= 1e-9,
         fmt("softmax rows: worst |sum-1|=%.3e; uniform CE off by %.3e (want <=1e-9)",
             worst_sum, ce_err));
}

void criterion_6() {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const bool wide = t % 2 == 0;  // fewer samples than hidden units
    const Eigen::Index n = wide ? 8 + t : 30 + t;
    const Eigen::Index l = wide ? 20 + t : 10 + t % 6;
    const double lambda = t % 3 == 0 ? 1.0 : 100.0;
    const MatrixXd U = random_matrix(n, l, 1000 + t);
    const MatrixXd T = random_matrix(n, 2, 2000 + t);
    const MatrixXd beta = elm_train(U, T, lambda);
    const MatrixXd ref = ridge_oracle(U, T, lambda);
    worst = std::max(worst, (beta - ref).norm() / ref.norm());
  }
  report(6, worst < 1e-8,
         fmt("ridge solve vs dense oracle, 20 instances: worst rel err=%.3e (want <1e-8)",
             worst));
}

void criterion_7() {
  // Orthonormal design: FISTA must land on the soft-threshold closed form.
  double worst_closed = 0.0;
  for (int t = 0; t < 4; ++t) {
    const Eigen::Index n = 10 + t;
    MatrixXd H;
    if (t == 0) {
      H = MatrixXd::Identity(n, n);
    } else {
      const MatrixXd u = random_matrix(n, 1, 3000 + t);
      H = MatrixXd::Identity(n, n) - 2.0 * (u * u.transpose()) / u.squaredNorm();
    }
    const MatrixXd X = random_matrix(n, 3, 4000 + t);
    const double l1 = 0.1 + 0.2 * t;
    const MatrixXd got = fista_solve(H, X, l1, 60);
    MatrixXd want = H.transpose() * X;
    soft_threshold_inplace(want, l1 / 2.0);
    worst_closed = std::max(worst_closed, (got - want).cwiseAbs().maxCoeff());
  }

  int fista_wins = 0;
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index n = 12 + t, l = 8 + t % 5, d = 6 + t % 4;
    const MatrixXd H = random_matrix(n, l, 5000 + t);
    const MatrixXd X = random_matrix(n, d, 6000 + t);
    const double l1 = 0.05 + 0.1 * (t % 3);
    const int iters = 30;
    const double obj_f = lasso_objective(H, X, fista_solve(H, X, l1, iters), l1);
    const double obj_i = lasso_objective(H, X, ista_solve(H, X, l1, iters), l1);
    if (obj_f <= obj_i + 1e-9) ++fista_wins;
  }
  report(7, worst_closed < 1e-6 && fista_wins == 10,
         fmt("orthonormal closed form: max |diff|=%.3e (want <1e-6); accelerated solver at or "
             "below plain ISTA on %d/10 instances",
             worst_closed, fista_wins));
}

void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  TextureDatasetConfig tc;
  tc.patch_size = 32;
  tc.n_train = 480;
  tc.n_test = 240;
  tc.seed = 42;
  const TextureDataset ds = make_texture_dataset(tc);

  const auto count_pos = [](const std::vector<LabeledSample>& v) {
    long long p = 0;
    for (const auto& s : v) p += s.label;
    return p;
  };
  const long long train_pos = count_pos(ds.train);
  const long long test_pos = count_pos(ds.test);
  const bool shape_ok =
      ds.train.size() >= 400 && ds.test.size() >= 200 &&
      train_pos * 3 == static_cast<long long>(ds.train.size()) - train_pos &&
      test_pos * 3 == static_cast<long long>(ds.test.size()) - test_pos;

  const CnnArchitecture arch = CnnArchitecture::build(32, 2, 8, 5, 64);
  SgdConfig sgd;
  sgd.lr = 0.05;
  sgd.init_sigma = 0.05;
  sgd.batch_size = 32;
  sgd.epochs = 30;
  sgd.seed = 42;
  const ScnnTrainResult scnn = train_scnn(ds.train, arch, sgd);
  const double scnn_acc = evaluate(ScnnSoftmaxClassifier(scnn.net), ds.test).accuracy_pct;

  HelmConfig hc;
  hc.n_ae1 = 200;
  hc.n_ae2 = 200;
  hc.n_classifier = 2000;
  hc.lambda_reg = 100.0;
  hc.seed = 42;
  const HelmTrainResult helm = helm_train(ds.train, hc);
  const double helm_acc = evaluate(HelmClassifier(helm.model), ds.test).accuracy_pct;

  FeatureMatrix feats;
  feats.rows = ds.train.size();
  feats.source_tag = "scnn_fc";
  std::vector<int> labels;
  for (const LabeledSample& s : ds.train) {
    const std::vector<double> f = extract_fc_features(scnn.net, s.patch);
    feats.dim = f.size();
    for (double v : f) feats.data.push_back(static_cast<float>(v));
    labels.push_back(s.label == 1 ? 1 : -1);
  }
  const SvmTrainResult svm = train_linear_svm(feats, labels, 1.0, 20, 42);
  const double svm_acc =
      evaluate(ScnnSvmClassifier(scnn.net, svm.model), ds.test).accuracy_pct;

  const double elapsed = seconds_since(t0);
  const bool pass = shape_ok && scnn_acc >= 90.0 && helm_acc >= 90.0 && svm_acc >= 85.0 &&
                    elapsed < 600.0;
  report(8, pass,
         fmt("texture dataset %zu/%zu (1:3 pos:neg %s): scnn %.1f%% (want >=90), helm %.1f%% "
             "(want >=90), scnn+svm %.1f%% (want >=85), %.1f s (want <600)",
             ds.train.size(), ds.test.size(), shape_ok ? "ok" : "BROKEN", scnn_acc, helm_acc,
             svm_acc, elapsed));
}

void criterion_9() {
  // Train on three mined scenes, evaluate detection quality on a fourth.
  std::vector<VideoForDataset> videos;
  for (std::uint64_t seed : {101u, 102u, 103u}) {
    const Scene scene = make_demo_scene(seed);
    VideoForDataset v;
    v.frames = scene.frames;
    v.person_id = static_cast<int>(seed - 100);
    v.human_boxes.resize(scene.frames.size());
    for (const TruthBox& tb : scene.truth) {
      if (tb.kind == SpriteKind::human) v.human_boxes[tb.frame].push_back(tb.box);
    }
    videos.push_back(std::move(v));
  }
  DetectorConfig mine_cfg;
  mine_cfg.mask.k_sigma = 2.0;
  mine_cfg.patch_size = 24;
  const std::vector<LabeledSample> mined = build_patch_dataset(videos, mine_cfg, 2);

  HelmConfig hc;
  hc.n_ae1 = 64;
  hc.n_ae2 = 64;
  hc.n_classifier = 512;
  hc.lambda_reg = 100.0;
  hc.seed = derive_seed(42, "demo.helm");
  const HelmClassifier clf(helm_train(mined, hc).model);

  const Scene scene = make_demo_scene(42);
  DetectorConfig cfg;
  cfg.mask.k_sigma = 2.5;
  cfg.patch_size = 24;
  const std::vector<DetectionResult> results = process_video(scene.frames, cfg, clf);

  const SpriteConfig& human = scene.cfg.sprites[0];
  const SpriteConfig& car = scene.cfg.sprites[1];
  int human_hits = 0, car_clean = 0;
  for (const DetectionResult& r : results) {
    const BoundingBox truth_h = human.box_at(r.frame_index);
    const BoundingBox truth_c = car.box_at(r.frame_index);
    bool hit = false, dirty = false;
    for (const ScoredBox& sb : r.humans) {
      if (iou(sb.box, truth_h) >= 0.5) hit = true;
      if (iou(sb.box, truth_c) >= 0.3) dirty = true;
    }
    human_hits += hit ? 1 : 0;
    car_clean += dirty ? 0 : 1;
  }
  const double n = static_cast<double>(results.size());
  const double hit_rate = human_hits / n;
  const double clean_rate = car_clean / n;
  report(9, hit_rate >= 0.9 && clean_rate >= 0.9,
         fmt("scene detection (%zu mined samples): human box hit in %d/%d frames, car clean in "
             "%d/%d (want >=90%% both)",
             mined.size(), human_hits, static_cast<int>(n), car_clean, static_cast<int>(n)));
}

void criterion_10(const fs::path& work) {
  // a) split table is exactly the documented rotation
  const std::vector<std::vector<int>> want = {
      {1, 2, 3, 4},  {5, 6, 7, 8},  {9, 10, 11, 12}, {1, 3, 5, 7},  {2, 4, 6, 8},
      {1, 4, 7, 10}, {2, 5, 8, 11}, {3, 6, 9, 12},   {1, 5, 9, 12}, {1, 6, 11, 12}};
  const std::vector<CvSplit> splits = leave_four_out_splits();
  bool table_ok = splits.size() == want.size();
  for (std::size_t i = 0; table_ok && i < splits.size(); ++i) {
    table_ok = std::vector<int>(splits[i].test_persons.begin(), splits[i].test_persons.end()) ==
               want[i];
  }

  // b) instrumented leakage check: capture every training set and verify no
  // held-out person ever contributes a sample
  std::vector<LabeledSample> data;
  Rng rng(7);
  for (int i = 0; i < 96; ++i) {
    LabeledSample s;
    s.label = i % 2;
    s.person_id = 1 + i % 12;
    s.patch = GrayFrame(8, 8);
    for (float& v : s.patch.data) {
      v = static_cast<float>(s.label == 1 ? 0.8 + 0.1 * rng.uniform()
                                          : 0.1 + 0.1 * rng.uniform());
    }
    data.push_back(std::move(s));
  }
  bool leak_free = true;
  std::size_t calls = 0;
  const TrainerFn trainer = [&](const std::vector<LabeledSample>& train, std::uint64_t) {
    const CvSplit& split = splits[calls++];
    for (const LabeledSample& s : train) {
      if (split.is_test_person(s.person_id)) leak_free = false;
    }
    return std::make_unique<MeanBrightnessClassifier>();
  };
  const CvResult cv = cross_validate(data, trainer, splits, 42);
  leak_free = leak_free && calls == splits.size();

  // c) the CLI emits exactly one metrics row per split
  const fs::path dir = work / "cv";
  fs::create_directories(dir);
  const fs::path ds = dir / "tex.aerd";
  const fs::path csv = dir / "cv.csv";
  const std::string tiny_helm =
      " --set helm.n_ae1=32 --set helm.n_ae2=32 --set helm.n_classifier=128"
      " --set helm.fista_iters=20";
  int rc = run_cli("dataset --texture --patch-size 16 --train-count 120 --test-count 48 --out " +
                       ds.string() + " --seed 5",
                   dir / "dataset.log");
  bool cli_ok = rc == 0;
  if (cli_ok) {
    rc = run_cli("eval --cv --method helm --data " + ds.string() + " --out " + csv.string() +
                     tiny_helm + " --seed 5",
                 dir / "eval.log");
    cli_ok = rc == 0;
  }
  int rows = 0;
  bool rows_named_ok = true;
  if (cli_ok) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      ++rows;
      if (!line.starts_with(std::to_string(rows) + ",")) rows_named_ok = false;
    }
  }
  const bool pass = table_ok && leak_free && cli_ok && rows == 10 && rows_named_ok &&
                    cv.rows.size() == 10;
  report(10, pass,
         fmt("splits table %s; leakage-free across %zu instrumented splits: %s; cv CSV rows=%d "
             "(want 10, numbered %s)",
             table_ok ? "exact" : "WRONG", calls, leak_free ? "yes" : "NO", rows,
             rows_named_ok ? "ok" : "BAD"));
}

void criterion_11() {
  TextureDatasetConfig tc;
  tc.patch_size = 32;
  tc.n_train = 480;
  tc.n_test = 240;
  tc.seed = 42;
  const TextureDataset ds = make_texture_dataset(tc);

  HelmConfig hc;  // full-width stack
  hc.n_ae1 = 1000;
  hc.n_ae2 = 1000;
  hc.n_classifier = 12000;
  hc.lambda_reg = 100.0;
  hc.seed = 42;
  auto t0 = std::chrono::steady_clock::now();
  const HelmTrainResult helm = helm_train(ds.train, hc);
  const double helm_s = seconds_since(t0);

  const CnnArchitecture arch = CnnArchitecture::build(32, 2, 20, 5, 1000);
  SgdConfig sgd;  // same schedule as the full-size network
  sgd.lr = 0.05;
  sgd.init_sigma = 0.05;
  sgd.batch_size = 300;
  sgd.epochs = 30;
  sgd.seed = 42;
  t0 = std::chrono::steady_clock::now();
  const ScnnTrainResult scnn = train_scnn(ds.train, arch, sgd);
  const double scnn_s = seconds_since(t0);

  (void)helm;
  (void)scnn;
  report(11, helm_s < scnn_s,
         fmt("training time on %zu samples: helm %.1f s vs scnn %.1f s (want helm < scnn)",
             ds.train.size(), helm_s, scnn_s));
}

void criterion_12(const fs::path& work) {
  const std::string tiny_helm =
      " --set helm.n_ae1=32 --set helm.n_ae2=32 --set helm.n_classifier=128"
      " --set helm.fista_iters=20";
  const auto chain = [&](const fs::path& dir) -> bool {
    fs::create_directories(dir);
    const fs::path scene = dir / "scene";
    const fs::path data = dir / "train.aerd";
    const fs::path model = dir / "model.aerd";
    const fs::path csv = dir / "metrics.csv";
    if (run_cli("synth --out " + scene.string() +
                    " --set scene.width=120 --set scene.height=90 --set scene.frames=20"
                    " --set scene.pan_x=1 --seed 33",
                dir / "synth.log") != 0)
      return false;
    if (run_cli("dataset --scenes " + scene.string() + " --stride 3 --out " + data.string() +
                    " --set detect.patch_size=16 --set detect.min_area=16"
                    " --set mask.k_sigma=2.0 --seed 33",
                dir / "dataset.log") != 0)
      return false;
    if (run_cli("train --data " + data.string() + " --method helm --out " + model.string() +
                    tiny_helm + " --seed 33",
                dir / "train.log") != 0)
      return false;
    if (run_cli("eval --data " + data.string() + " --model " + model.string() + " --out " +
                    csv.string() + " --seed 33",
                dir / "eval.log") != 0)
      return false;
    return true;
  };

  const fs::path a = work / "rep_a";
  const fs::path b = work / "rep_b";
  const bool ran = chain(a) && chain(b);
  bool data_eq = false, model_eq = false, csv_eq = false;
  if (ran) {
    data_eq = slurp(a / "train.aerd") == slurp(b / "train.aerd");
    model_eq = slurp(a / "model.aerd") == slurp(b / "model.aerd");
    csv_eq = !slurp(a / "metrics.csv").empty() &&
             slurp(a / "metrics.csv") == slurp(b / "metrics.csv");
  }
  report(12, ran && data_eq && model_eq && csv_eq,
         fmt("repeated pipeline runs: chains %s, dataset %s, model %s, metrics %s",
             ran ? "ok" : "FAILED", data_eq ? "identical" : "DIFFER",
             model_eq ? "identical" : "DIFFER", csv_eq ? "identical" : "DIFFER"));
}

void criterion_13() {
  const char* dir = std::getenv("UCF_ARG_DIR");
  if (dir == nullptr) {
    std::printf("CRITERION 13: SKIP  UCF_ARG_DIR not set; external aerial footage unavailable\n");
    return;
  }
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    report(13, false, fmt("UCF_ARG_DIR=%s is not a directory", dir));
    return;
  }
  std::size_t entries = 0;
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    ++entries;
  }
  report(13, entries > 0,
         fmt("external footage at %s: %zu entries (results logged, no threshold applied)", dir,
             entries));
}

}  // namespace

int main() {
  setenv("AERIALDET_THREADS", "1", 1);  // timing bounds assume a single core

  const fs::path work = fs::temp_directory_path() / "aerialdet_acceptance";
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);

  guarded(1, criterion_1);
  guarded(2, criterion_2);
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(6, criterion_6);
  guarded(7, criterion_7);
  guarded(8, criterion_8);
  guarded(9, criterion_9);
  guarded(10, [&] { criterion_10(work); });
  guarded(11, criterion_11);
  guarded(12, [&] { criterion_12(work); });
  guarded(13, criterion_13);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
