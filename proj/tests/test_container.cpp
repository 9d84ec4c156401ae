#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aerialdet/classifiers.hpp"
#include "aerialdet/model_io.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/scene.hpp"

using namespace aerialdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("aerialdet_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelContainer sample_container() {
  ModelContainer c;
  c.kind = "demo";
  c.set_meta("alpha", "1.5");
  c.set_meta("note", "round trip");
  TensorBlob t;
  t.name = "w";
  t.dims = {2, 3};
  t.data = {1.0f, -2.5f, 0.0f, 4.25f, 1e-7f, -3.75f};
  c.tensors.push_back(t);
  TensorBlob b;
  b.name = "b";
  b.dims = {3};
  b.data = {0.5f, 0.25f, -0.125f};
  c.tensors.push_back(b);
  return c;
}

std::vector<LabeledSample> small_dataset() {
  TextureDatasetConfig cfg;
  cfg.patch_size = 12;
  cfg.n_train = 20;
  cfg.n_test = 1;
  cfg.seed = 5;
  auto ds = make_texture_dataset(cfg);
  ds.train[3].activity = "walking";  // not preserved by the container
  return ds.train;
}

}  // namespace

TEST_CASE("containers round-trip kinds, ordered metadata and tensors", "[container]") {
  const fs::path dir = temp_dir("container_rt");
  const ModelContainer c = sample_container();
  save_container(dir / "m.aerd", c);
  const ModelContainer back = load_container(dir / "m.aerd");
  CHECK(back.kind == "demo");
  REQUIRE(back.meta.size() == 2);
  CHECK(back.meta[0].first == "alpha");
  CHECK(back.meta[0].second == "1.5");
  CHECK(back.meta[1].first == "note");
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].name == "w");
  CHECK(back.tensors[0].dims == std::vector<std::uint64_t>{2, 3});
  CHECK(back.tensors[0].data == c.tensors[0].data);
  CHECK(back.tensor("b").data == c.tensors[1].data);
  CHECK_THROWS_AS(back.tensor("absent"), FormatError);
  CHECK(back.meta_value("note") == "round trip");
  CHECK_THROWS_AS(back.meta_value("absent"), FormatError);

  // identical content serializes to identical bytes
  save_container(dir / "m2.aerd", c);
  CHECK(slurp(dir / "m.aerd") == slurp(dir / "m2.aerd"));
  fs::remove_all(dir);
}

TEST_CASE("payload corruption is caught by the checksum", "[container]") {
  const fs::path dir = temp_dir("container_crc");
  save_container(dir / "m.aerd", sample_container());
  auto bytes = slurp(dir / "m.aerd");

  for (const std::size_t pos : {std::size_t{6}, bytes.size() / 2, bytes.size() - 6}) {
    auto bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x40);
    spit(dir / "bad.aerd", bad);
    CHECK_THROWS_AS(load_container(dir / "bad.aerd"), FormatError);
  }

  auto trunc = bytes;
  trunc.resize(trunc.size() - 9);
  spit(dir / "trunc.aerd", trunc);
  CHECK_THROWS_AS(load_container(dir / "trunc.aerd"), FormatError);

  auto extra = bytes;
  extra.push_back(0);
  spit(dir / "extra.aerd", extra);
  CHECK_THROWS_AS(load_container(dir / "extra.aerd"), FormatError);

  auto magic = bytes;
  magic[0] = 'X';
  spit(dir / "magic.aerd", magic);
  CHECK_THROWS_AS(load_container(dir / "magic.aerd"), FormatError);

  CHECK_THROWS_AS(load_container(dir / "absent.aerd"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("scnn containers restore the exact trained network", "[container]") {
  const fs::path dir = temp_dir("container_scnn");
  TextureDatasetConfig dcfg;
  dcfg.patch_size = 12;
  dcfg.n_train = 24;
  dcfg.n_test = 8;
  dcfg.seed = 9;
  const TextureDataset ds = make_texture_dataset(dcfg);

  SgdConfig cfg;
  cfg.lr = 0.05;
  cfg.init_sigma = 0.05;
  cfg.batch_size = 8;
  cfg.epochs = 6;
  cfg.seed = 2;
  const CnnArchitecture arch = CnnArchitecture::build(12, 1, 2, 3, 8);
  const ScnnTrainResult r = train_scnn(ds.train, arch, cfg);

  save_container(dir / "scnn.aerd", to_container(r.net));
  const ModelContainer c = load_container(dir / "scnn.aerd");
  CHECK(c.kind == "scnn");
  const CnnNetwork back = scnn_from_container(c);
  CHECK(back.arch == r.net.arch);
  CHECK(back.params == r.net.params);
  for (const auto& s : ds.test) {
    const auto a = scnn_predict(r.net, s.patch);
    const auto b = scnn_predict(back, s.patch);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
  fs::remove_all(dir);
}

TEST_CASE("helm containers restore predictions exactly", "[container]") {
  const fs::path dir = temp_dir("container_helm");
  TextureDatasetConfig dcfg;
  dcfg.patch_size = 12;
  dcfg.n_train = 32;
  dcfg.n_test = 10;
  dcfg.seed = 4;
  const TextureDataset ds = make_texture_dataset(dcfg);

  HelmConfig cfg;
  cfg.n_ae1 = 16;
  cfg.n_ae2 = 16;
  cfg.n_classifier = 64;
  cfg.fista_iters = 20;
  cfg.seed = 8;
  const HelmTrainResult r = helm_train(ds.train, cfg);

  save_container(dir / "helm.aerd", to_container(r.model));
  const ModelContainer c = load_container(dir / "helm.aerd");
  CHECK(c.kind == "helm");
  const HelmModel back = helm_from_container(c);
  CHECK(back.config.n_ae1 == 16);
  CHECK(back.config.n_classifier == 64);
  CHECK(back.classifier.layer.seed == r.model.classifier.layer.seed);

  std::vector<const GrayFrame*> patches;
  for (const auto& s : ds.test) patches.push_back(&s.patch);
  const ElmPrediction pa = helm_predict(r.model, patches);
  const ElmPrediction pb = helm_predict(back, patches);
  CHECK(pa.labels == pb.labels);
  CHECK(pa.scores == pb.scores);
  fs::remove_all(dir);
}

TEST_CASE("svm containers restore the margin head exactly", "[container]") {
  const fs::path dir = temp_dir("container_svm");
  SvmModel m;
  m.w = {0.5, -1.25, 3.0};
  m.b = 0.75;
  m.c = 2.0;
  save_container(dir / "svm.aerd", to_container(m));
  const ModelContainer c = load_container(dir / "svm.aerd");
  CHECK(c.kind == "svm");
  const SvmModel back = svm_from_container(c);
  CHECK(back.w == m.w);
  CHECK(back.b == m.b);
  CHECK(back.c == m.c);
  fs::remove_all(dir);
}

TEST_CASE("dataset containers carry patches, labels and person ids", "[container]") {
  const fs::path dir = temp_dir("container_ds");
  const std::vector<LabeledSample> data = small_dataset();
  save_container(dir / "d.aerd", to_container(data, 5));
  const ModelContainer c = load_container(dir / "d.aerd");
  CHECK(c.kind == "dataset");
  CHECK(c.meta_value("patch_size") == "12");
  CHECK(c.meta_value("seed") == "5");
  const std::vector<LabeledSample> back = dataset_from_container(c);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].label == data[i].label);
    CHECK(back[i].person_id == data[i].person_id);
    CHECK(back[i].patch.data == data[i].patch.data);
    // activity strings are not part of the format
    CHECK(back[i].activity.empty());
  }
  CHECK_THROWS_AS(dataset_from_container(sample_container()), FormatError);
  CHECK_THROWS_AS(to_container(std::vector<LabeledSample>{}, 1), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("classifier loading dispatches on container kind", "[container]") {
  const fs::path dir = temp_dir("container_clf");
  TextureDatasetConfig dcfg;
  dcfg.patch_size = 12;
  dcfg.n_train = 24;
  dcfg.n_test = 6;
  dcfg.seed = 3;
  const TextureDataset ds = make_texture_dataset(dcfg);

  SgdConfig cfg;
  cfg.lr = 0.05;
  cfg.init_sigma = 0.05;
  cfg.batch_size = 8;
  cfg.epochs = 5;
  cfg.seed = 1;
  const ScnnTrainResult r = train_scnn(ds.train, CnnArchitecture::build(12, 1, 2, 3, 8), cfg);
  save_container(dir / "scnn.aerd", to_container(r.net));

  const auto scnn_clf = classifier_from_file(dir / "scnn.aerd");
  CHECK(scnn_clf->name() == "scnn_softmax");
  CHECK(scnn_clf->input_size() == 12);
  const auto [label, score] = scnn_clf->classify(ds.test[0].patch);
  CHECK((label == 0 || label == 1));
  CHECK(score >= 0.0);
  CHECK(score <= 1.0);

  // svm heads refuse to load without their feature extractor
  FeatureMatrix feats;
  feats.rows = ds.train.size();
  feats.dim = 8;
  for (const auto& s : ds.train) {
    for (double v : extract_fc_features(r.net, s.patch)) {
      feats.data.push_back(static_cast<float>(v));
    }
  }
  std::vector<int> pm;
  for (const auto& s : ds.train) pm.push_back(s.label == 1 ? 1 : -1);
  const SvmTrainResult svm = train_linear_svm(feats, pm, 1.0, 10, 6);
  save_container(dir / "svm.aerd", to_container(svm.model));
  CHECK_THROWS_AS(classifier_from_file(dir / "svm.aerd"), ConfigError);
  const auto svm_clf = classifier_from_file(dir / "svm.aerd", dir / "scnn.aerd");
  CHECK(svm_clf->name() == "scnn_svm");
  CHECK(svm_clf->input_size() == 12);

  // unknown kinds are rejected
  save_container(dir / "odd.aerd", sample_container());
  CHECK_THROWS_AS(classifier_from_file(dir / "odd.aerd"), FormatError);
  fs::remove_all(dir);
}
