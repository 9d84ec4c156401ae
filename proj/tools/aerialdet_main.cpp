// Command-line front end: scene synthesis, dataset building, training,
// evaluation, detection, and timing benchmarks.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aerialdet/aerialdet.hpp"

namespace fs = std::filesystem;
using namespace aerialdet;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
  int jobs = 0;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "config file (key=value lines, # comments)");
  sub->add_option("--set", c.sets, "override one config key, key=value (repeatable)");
  sub->add_option("--seed", c.seed, "master seed (shorthand for --set seed=N)");
  sub->add_option("--jobs", c.jobs, "cap worker threads for this run");
}

RunConfig make_run_config(const CommonOpts& c) {
  RunConfig rc;
  if (!c.config_path.empty()) rc.load_file(c.config_path);
  for (const std::string& kv : c.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.seed.empty()) rc.set("seed", c.seed);
  if (c.jobs > 0) {
    ::setenv("AERIALDET_THREADS", std::to_string(c.jobs).c_str(), 1);
  }
  return rc;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Sprite layouts for the two scene presets. Sizes scale with the frame so
// overridden scene dimensions still validate.
SceneConfig demo_scene(const RunConfig& rc) {
  SceneConfig sc;
  rc.apply_scene_keys(sc);
  const int base = std::min(sc.width, sc.height);
  const int human_size = std::max(8, base / 8);
  const int car_size = std::max(6, base / 10);

  SpriteConfig human;
  human.kind = SpriteKind::human;
  human.size = human_size;
  human.vx = 1.0;
  human.vy = 0.0;
  human.x0 = sc.width / 8;
  human.y0 = sc.height / 4;
  human.texture_seed = derive_seed(sc.seed, "sprite.human");
  sc.sprites.push_back(human);

  // vertical motion: the car's horizontal stripes carry no gradient along
  // x, so horizontal-only relative motion would be nearly invisible to flow
  SpriteConfig car;
  car.kind = SpriteKind::car;
  car.size = car_size;
  car.vx = 0.0;
  car.vy = 1.0;
  car.x0 = (3 * sc.width) / 4 - car.width() / 2;
  car.y0 = sc.height / 6;
  car.texture_seed = derive_seed(sc.seed, "sprite.car");
  sc.sprites.push_back(car);

  sc.validate();
  return sc;
}

SceneConfig person_scene(const RunConfig& rc, int person_id) {
  SceneConfig sc;
  rc.apply_scene_keys(sc);
  sc.seed = derive_seed(rc.get_seed(), "synth.person", static_cast<std::uint64_t>(person_id));
  const int base = std::min(sc.width, sc.height);

  SpriteConfig human;
  human.kind = SpriteKind::human;
  human.size = std::max(8, base / 8);
  human.vx = 1.0;
  human.vy = 0.0;
  human.x0 = sc.width / 8;
  human.y0 = sc.height / 4;
  human.texture_seed = derive_seed(sc.seed, "sprite.human");
  sc.sprites.push_back(human);

  SpriteConfig clutter;
  clutter.kind = SpriteKind::clutter;
  clutter.size = std::max(6, base / 10);
  clutter.vx = 0.0;
  clutter.vy = 1.0;
  clutter.x0 = (3 * sc.width) / 4 - clutter.width() / 2;
  clutter.y0 = sc.height / 6;
  clutter.texture_seed = derive_seed(sc.seed, "sprite.clutter");
  sc.sprites.push_back(clutter);

  sc.validate();
  return sc;
}

int run_synth(const CommonOpts& common, const std::string& out, const std::string& preset,
              int person_id, const std::string& activity) {
  const RunConfig rc = make_run_config(common);
  if (preset == "demo") {
    const Scene scene = generate_scene(demo_scene(rc));
    save_scene(out, scene, person_id, activity);
    std::cout << "wrote " << scene.frames.size() << " frames to " << out << "\n";
    return 0;
  }
  if (preset == "cv12") {
    for (int p = 1; p <= 12; ++p) {
      const Scene scene = generate_scene(person_scene(rc, p));
      char name[16];
      std::snprintf(name, sizeof(name), "person_%02d", p);
      save_scene(fs::path(out) / name, scene, p, activity);
    }
    std::cout << "wrote 12 scenes to " << out << "\n";
    return 0;
  }
  throw ConfigError("unknown preset: " + preset + " (expected demo or cv12)");
}

std::vector<fs::path> collect_scene_dirs(const std::vector<std::string>& roots) {
  std::vector<fs::path> dirs;
  for (const std::string& root : roots) {
    if (fs::exists(fs::path(root) / "scene.json")) {
      dirs.emplace_back(root);
      continue;
    }
    std::vector<fs::path> subs;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
      if (entry.is_directory() && fs::exists(entry.path() / "scene.json")) {
        subs.push_back(entry.path());
      }
    }
    if (ec) throw IoError("cannot read directory: " + root);
    std::sort(subs.begin(), subs.end());
    dirs.insert(dirs.end(), subs.begin(), subs.end());
  }
  if (dirs.empty()) throw ConfigError("no scene directories found");
  return dirs;
}

int run_dataset(const CommonOpts& common, const std::vector<std::string>& scenes,
                bool texture, const std::string& out, const std::string& out_test,
                int stride_flag, int patch_size_flag, int train_count, int test_count) {
  const RunConfig rc = make_run_config(common);
  if (texture) {
    TextureDatasetConfig cfg;
    cfg.seed = rc.get_seed();
    if (patch_size_flag > 0) cfg.patch_size = patch_size_flag;
    if (train_count > 0) cfg.n_train = train_count;
    if (test_count > 0) cfg.n_test = test_count;
    const TextureDataset ds = make_texture_dataset(cfg);
    save_container(out, to_container(ds.train, cfg.seed));
    std::cout << "wrote " << ds.train.size() << " train samples to " << out << "\n";
    if (!out_test.empty()) {
      save_container(out_test, to_container(ds.test, cfg.seed));
      std::cout << "wrote " << ds.test.size() << " test samples to " << out_test << "\n";
    }
    return 0;
  }

  if (scenes.empty()) throw ConfigError("dataset: pass --scenes or --texture");
  std::vector<VideoForDataset> videos;
  for (const fs::path& dir : collect_scene_dirs(scenes)) {
    videos.push_back(load_scene_video(dir));
  }
  const int stride = stride_flag > 0 ? stride_flag : rc.get_int("dataset.stride");
  const std::vector<LabeledSample> samples = build_patch_dataset(videos, rc.detector(), stride);
  if (samples.empty()) throw ConfigError("dataset: no candidate patches were mined");
  save_container(out, to_container(samples, rc.get_seed()));
  std::size_t positives = 0;
  for (const auto& s : samples) positives += (s.label == 1);
  std::cout << "wrote " << samples.size() << " samples (" << positives << " human) to " << out
            << "\n";
  return 0;
}

FeatureMatrix scnn_feature_matrix(const CnnNetwork& net, const std::vector<LabeledSample>& data) {
  FeatureMatrix f;
  f.rows = data.size();
  f.source_tag = "scnn.fc";
  for (const LabeledSample& s : data) {
    const std::vector<double> v = extract_fc_features(net, s.patch);
    if (f.dim == 0) {
      f.dim = v.size();
      f.data.reserve(f.rows * f.dim);
    }
    for (double x : v) f.data.push_back(static_cast<float>(x));
  }
  f.validate();
  return f;
}

std::vector<int> pm_labels(const std::vector<LabeledSample>& data) {
  std::vector<int> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data[i].label == 1 ? 1 : -1;
  return y;
}

int run_train(const CommonOpts& common, const std::string& data_path, const std::string& method,
              const std::string& out, const std::string& scnn_model,
              const std::string& features_path) {
  const RunConfig rc = make_run_config(common);
  const std::vector<LabeledSample> data = dataset_from_container(load_container(data_path));

  if (method == "scnn") {
    const ScnnTrainResult res = train_scnn(data, rc.scnn_arch(), rc.scnn_sgd());
    print_warnings(res.warnings);
    save_container(out, to_container(res.net));
  } else if (method == "helm") {
    const HelmTrainResult res = helm_train(data, rc.helm());
    print_warnings(res.warnings);
    save_container(out, to_container(res.model));
  } else if (method == "svm") {
    FeatureMatrix feats;
    if (!features_path.empty()) {
      feats = load_external_features(features_path, data.size());
    } else if (!scnn_model.empty()) {
      const CnnNetwork net = scnn_from_container(load_container(scnn_model));
      feats = scnn_feature_matrix(net, data);
    } else {
      throw ConfigError("train --method svm needs --scnn-model or --features");
    }
    const SvmTrainResult res = train_linear_svm(feats, pm_labels(data), rc.get_double("svm.c"),
                                                rc.get_int("svm.epochs"), rc.get_seed());
    print_warnings(res.warnings);
    save_container(out, to_container(res.model));
  } else {
    throw ConfigError("unknown method: " + method + " (expected scnn, helm, or svm)");
  }
  std::cout << "wrote model to " << out << "\n";
  return 0;
}

// Per-split trainer used by eval --cv and bench. The svm variant trains its
// own feature network first, so a split never sees another split's features.
TrainerFn make_trainer(const std::string& method, const RunConfig& rc) {
  if (method == "scnn") {
    return [&rc](const std::vector<LabeledSample>& train, std::uint64_t seed) {
      SgdConfig cfg = rc.scnn_sgd();
      cfg.seed = seed;
      ScnnTrainResult res = train_scnn(train, rc.scnn_arch(), cfg);
      print_warnings(res.warnings);
      return std::make_unique<ScnnSoftmaxClassifier>(std::move(res.net));
    };
  }
  if (method == "helm") {
    return [&rc](const std::vector<LabeledSample>& train, std::uint64_t seed) {
      HelmConfig cfg = rc.helm();
      cfg.seed = seed;
      HelmTrainResult res = helm_train(train, cfg);
      print_warnings(res.warnings);
      return std::make_unique<HelmClassifier>(std::move(res.model));
    };
  }
  if (method == "svm") {
    return [&rc](const std::vector<LabeledSample>& train, std::uint64_t seed) {
      SgdConfig cfg = rc.scnn_sgd();
      cfg.seed = derive_seed(seed, "svm.features");
      ScnnTrainResult net_res = train_scnn(train, rc.scnn_arch(), cfg);
      print_warnings(net_res.warnings);
      const FeatureMatrix feats = scnn_feature_matrix(net_res.net, train);
      SvmTrainResult svm_res =
          train_linear_svm(feats, pm_labels(train), rc.get_double("svm.c"),
                           rc.get_int("svm.epochs"), derive_seed(seed, "svm.head"));
      print_warnings(svm_res.warnings);
      return std::make_unique<ScnnSvmClassifier>(std::move(net_res.net),
                                                 std::move(svm_res.model));
    };
  }
  throw ConfigError("unknown method: " + method + " (expected scnn, helm, or svm)");
}

int run_eval(const CommonOpts& common, const std::string& data_path, const std::string& out,
             const std::string& model, const std::string& aux, bool cv, const std::string& method,
             bool timing) {
  const RunConfig rc = make_run_config(common);
  // usage problems must surface before any file is touched
  if (cv && method.empty()) throw ConfigError("eval --cv needs --method");
  if (!cv && model.empty()) throw ConfigError("eval needs --model or --cv");
  const std::vector<LabeledSample> data = dataset_from_container(load_container(data_path));
  std::vector<MetricsRow> rows;

  if (cv) {
    const TrainerFn trainer = make_trainer(method, rc);
    const CvResult res =
        cross_validate(data, trainer, leave_four_out_splits(), rc.get_seed(), timing);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const CvRow& r = res.rows[i];
      rows.push_back({std::to_string(i + 1), method, r.accuracy_pct, r.cm, r.train_s,
                      r.test_s_per_sample});
    }
    std::cout << "mean accuracy over " << res.rows.size() << " splits: " << res.mean_accuracy_pct
              << "%\n";
  } else {
    const ModelContainer c = load_container(model);
    const std::unique_ptr<PatchClassifier> clf = classifier_from_container(c, aux);
    const EvalResult r = evaluate(*clf, data);
    rows.push_back({"all", clf->name(), r.cm.accuracy_pct(), r.cm, 0.0, 0.0});
    std::cout << "accuracy: " << r.cm.accuracy_pct() << "% on " << data.size() << " samples\n";
  }
  write_metrics_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

int run_detect(const CommonOpts& common, const std::string& frames_dir, const std::string& model,
               const std::string& aux, const std::string& out) {
  const RunConfig rc = make_run_config(common);
  const std::vector<fs::path> files = list_frames(frames_dir);
  if (files.size() < 2) throw ConfigError("detect: need at least 2 frames in " + frames_dir);
  std::vector<GrayFrame> frames;
  frames.reserve(files.size());
  for (const fs::path& f : files) frames.push_back(read_frame(f));

  const std::unique_ptr<PatchClassifier> clf = classifier_from_file(model, aux);
  DetectorConfig cfg = rc.detector();
  cfg.patch_size = clf->input_size();  // crops must match the model input
  const std::vector<DetectionResult> results = process_video(frames, cfg, *clf);
  render_annotations(frames, results, out);

  std::size_t candidates = 0, humans = 0;
  for (const DetectionResult& r : results) {
    candidates += r.candidates.size();
    humans += r.humans.size();
  }
  std::cout << "processed " << results.size() << " frame pairs: " << candidates
            << " candidates, " << humans << " humans; wrote " << out << "\n";
  return 0;
}

int run_bench(const CommonOpts& common, const std::string& train_path,
              const std::string& test_path, const std::string& out,
              const std::string& methods_csv) {
  const RunConfig rc = make_run_config(common);
  const std::vector<LabeledSample> train = dataset_from_container(load_container(train_path));
  std::vector<LabeledSample> test;
  if (!test_path.empty()) {
    test = dataset_from_container(load_container(test_path));
  } else {
    // hold out the last quarter when no separate test set is given
    const std::size_t cut = train.size() - train.size() / 4;
    test.assign(train.begin() + static_cast<std::ptrdiff_t>(cut), train.end());
    if (test.empty()) throw ConfigError("bench: dataset too small to split");
  }

  std::vector<std::string> methods;
  std::string cur;
  for (char ch : methods_csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) methods.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }

  std::vector<BenchTrainer> trainers;
  const std::uint64_t seed = rc.get_seed();
  for (const std::string& m : methods) {
    const TrainerFn fn = make_trainer(m, rc);
    trainers.push_back({m, [fn, m, seed](const std::vector<LabeledSample>& tr) {
                          return fn(tr, derive_seed(seed, "bench." + m));
                        }});
  }

  const std::vector<BenchRow> bench = benchmark_timing(trainers, train, test);
  std::vector<MetricsRow> rows;
  for (const BenchRow& r : bench) {
    rows.push_back({"bench", r.method, r.accuracy_pct, r.cm, r.train_s, r.test_s_per_sample});
    std::cout << r.method << ": train " << r.train_s << " s, test " << r.test_s_per_sample
              << " s/sample, accuracy " << r.accuracy_pct << "%\n";
  }
  write_metrics_csv(out, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerial human detection: optical-flow motion segmentation + patch classifiers"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  CommonOpts synth_common;
  std::string synth_out, synth_preset = "demo", synth_activity = "walking";
  int synth_person = 1;
  synth->add_option("--out", synth_out, "output scene directory")->required();
  synth->add_option("--preset", synth_preset, "demo (one scene) or cv12 (12 person scenes)");
  synth->add_option("--person", synth_person, "person id stored with the demo scene");
  synth->add_option("--activity", synth_activity, "activity tag stored with the scene");
  add_common(synth, synth_common);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "build a labeled patch dataset");
  CommonOpts ds_common;
  std::vector<std::string> ds_scenes;
  bool ds_texture = false;
  std::string ds_out, ds_out_test;
  int ds_stride = 0, ds_patch = 0, ds_train_count = 0, ds_test_count = 0;
  dataset->add_option("--scenes", ds_scenes, "scene directory or root of scene directories");
  dataset->add_flag("--texture", ds_texture, "synthesize the two-class texture dataset instead");
  dataset->add_option("--out", ds_out, "output dataset container")->required();
  dataset->add_option("--out-test", ds_out_test, "also write a test split (texture mode)");
  dataset->add_option("--stride", ds_stride, "frame stride when mining scenes");
  dataset->add_option("--patch-size", ds_patch, "patch side length (texture mode)");
  dataset->add_option("--train-count", ds_train_count, "train sample count (texture mode)");
  dataset->add_option("--test-count", ds_test_count, "test sample count (texture mode)");
  add_common(dataset, ds_common);

  // train
  auto* train = app.add_subcommand("train", "train a classifier on a dataset container");
  CommonOpts tr_common;
  std::string tr_data, tr_method, tr_out, tr_scnn, tr_features;
  train->add_option("--data", tr_data, "dataset container")->required();
  train->add_option("--method", tr_method, "scnn | helm | svm")->required();
  train->add_option("--out", tr_out, "output model container")->required();
  train->add_option("--scnn-model", tr_scnn, "feature network for --method svm");
  train->add_option("--features", tr_features, "precomputed feature file for --method svm");
  add_common(train, tr_common);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a model or run cross-validation");
  CommonOpts ev_common;
  std::string ev_data, ev_out, ev_model, ev_aux, ev_method;
  bool ev_cv = false, ev_timing = false;
  eval->add_option("--data", ev_data, "dataset container")->required();
  eval->add_option("--out", ev_out, "metrics CSV path")->required();
  eval->add_option("--model", ev_model, "model container (single evaluation)");
  eval->add_option("--scnn", ev_aux, "feature network when --model is an svm");
  eval->add_flag("--cv", ev_cv, "run the 10 leave-four-person-out splits");
  eval->add_option("--method", ev_method, "training method for --cv: scnn | helm | svm");
  eval->add_flag("--timing", ev_timing, "fill the wall-clock columns (off: zeros, byte-stable)");
  add_common(eval, ev_common);

  // detect
  auto* detect = app.add_subcommand("detect", "detect humans in a frame directory");
  CommonOpts de_common;
  std::string de_frames, de_model, de_aux, de_out;
  detect->add_option("--frames", de_frames, "directory of .png/.pgm frames")->required();
  detect->add_option("--model", de_model, "model container")->required();
  detect->add_option("--scnn", de_aux, "feature network when --model is an svm");
  detect->add_option("--out", de_out, "output directory for annotated frames")->required();
  add_common(detect, de_common);

  // bench
  auto* bench = app.add_subcommand("bench", "time training and per-sample prediction");
  CommonOpts be_common;
  std::string be_train, be_test, be_out, be_methods = "scnn,helm,svm";
  bench->add_option("--data", be_train, "training dataset container")->required();
  bench->add_option("--test", be_test, "test dataset container (default: last quarter of --data)");
  bench->add_option("--out", be_out, "metrics CSV path")->required();
  bench->add_option("--methods", be_methods, "comma-separated subset of scnn,helm,svm");
  add_common(bench, be_common);

  // config-keys
  auto* keys = app.add_subcommand("config-keys", "list every config key with default and doc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      return run_synth(synth_common, synth_out, synth_preset, synth_person, synth_activity);
    }
    if (dataset->parsed()) {
      return run_dataset(ds_common, ds_scenes, ds_texture, ds_out, ds_out_test, ds_stride,
                         ds_patch, ds_train_count, ds_test_count);
    }
    if (train->parsed()) {
      return run_train(tr_common, tr_data, tr_method, tr_out, tr_scnn, tr_features);
    }
    if (eval->parsed()) {
      return run_eval(ev_common, ev_data, ev_out, ev_model, ev_aux, ev_cv, ev_method, ev_timing);
    }
    if (detect->parsed()) {
      return run_detect(de_common, de_frames, de_model, de_aux, de_out);
    }
    if (bench->parsed()) {
      return run_bench(be_common, be_train, be_test, be_out, be_methods);
    }
    if (keys->parsed()) {
      for (const ConfigKey& k : config_key_registry()) {
        std::cout << k.name << " = " << k.default_value << "  # " << k.doc << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
