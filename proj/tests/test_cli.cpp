#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = AERIALDET_CLI_PATH;

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("aerialdet_test_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// small texture dataset shared by the training tests
struct DatasetFixture {
  fs::path dir;
  fs::path train;
  fs::path test;

  DatasetFixture() : dir(temp_dir("fixture")), train(dir / "train.aerd"), test(dir / "test.aerd") {
    const int rc = run("dataset --texture --patch-size 16 --train-count 120 --test-count 48"
                       " --out " + train.string() + " --out-test " + test.string());
    REQUIRE(rc == 0);
  }
  ~DatasetFixture() { fs::remove_all(dir); }
};

const std::string kTinyHelm =
    " --set helm.n_ae1=32 --set helm.n_ae2=32 --set helm.n_classifier=128"
    " --set helm.fista_iters=20";
const std::string kTinyScnn =
    " --set scnn.input_size=16 --set scnn.blocks=1 --set scnn.maps=4 --set scnn.filter=3"
    " --set scnn.fc_units=32 --set scnn.lr=0.05 --set scnn.init_sigma=0.05"
    " --set scnn.batch_size=16 --set scnn.epochs=10";

}  // namespace

TEST_CASE("help and usage errors use the documented exit codes", "[cli]") {
  CHECK(run("--help") == 0);
  CHECK(run("synth --help") == 0);
  CHECK(run("") == 1);                       // a subcommand is required
  CHECK(run("fly") == 1);                    // unknown subcommand
  CHECK(run("synth") == 1);                  // missing required --out
  CHECK(run("synth --out /tmp/x --bogus") == 1);
  CHECK(run("eval --data nowhere.aerd --out /tmp/m.csv") == 1);  // neither --model nor --cv
}

TEST_CASE("data errors exit with code two", "[cli]") {
  const fs::path dir = temp_dir("data_errors");
  CHECK(run("train --data " + (dir / "missing.aerd").string() +
            " --method helm --out " + (dir / "m.aerd").string()) == 2);

  std::ofstream(dir / "junk.aerd") << "not a container";
  CHECK(run("train --data " + (dir / "junk.aerd").string() +
            " --method helm --out " + (dir / "m.aerd").string()) == 2);
  CHECK(run("detect --frames " + (dir / "nothing").string() + " --model " +
            (dir / "junk.aerd").string() + " --out " + (dir / "out").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("config keys are listed with defaults", "[cli]") {
  const fs::path dir = temp_dir("keys");
  const std::string cmd = kCli + " config-keys > " + (dir / "keys.txt").string() + " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string text = slurp(dir / "keys.txt");
  CHECK(text.find("seed") != std::string::npos);
  CHECK(text.find("hs.alpha") != std::string::npos);
  CHECK(text.find("helm.n_classifier") != std::string::npos);
  CHECK(text.find("12000") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("texture datasets train and evaluate end to end", "[cli]") {
  const DatasetFixture fx;

  // helm round trip
  const fs::path helm_model = fx.dir / "helm.aerd";
  REQUIRE(run("train --data " + fx.train.string() + " --method helm --out " +
              helm_model.string() + kTinyHelm) == 0);
  REQUIRE(fs::exists(helm_model));

  const fs::path metrics = fx.dir / "helm.csv";
  REQUIRE(run("eval --data " + fx.test.string() + " --model " + helm_model.string() +
              " --out " + metrics.string()) == 0);
  const auto rows = lines_of(slurp(metrics));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "split,method,accuracy,tp,fp,tn,fn,train_s,test_s_per_sample");
  CHECK(rows[1].rfind("all,helm,", 0) == 0);
  // timing columns stay zero without --timing
  CHECK(rows[1].find(",0.000000,0.000000000") != std::string::npos);

  // the model should be far better than chance on its own texture task
  const double acc = std::stod(rows[1].substr(std::string("all,helm,").size()));
  CHECK(acc >= 90.0);

  // scnn + svm head on scnn features
  const fs::path scnn_model = fx.dir / "scnn.aerd";
  REQUIRE(run("train --data " + fx.train.string() + " --method scnn --out " +
              scnn_model.string() + kTinyScnn) == 0);
  const fs::path svm_model = fx.dir / "svm.aerd";
  REQUIRE(run("train --data " + fx.train.string() + " --method svm --scnn-model " +
              scnn_model.string() + " --out " + svm_model.string() + kTinyScnn) == 0);

  // the svm head cannot evaluate without its feature network
  CHECK(run("eval --data " + fx.test.string() + " --model " + svm_model.string() + " --out " +
            (fx.dir / "no.csv").string()) == 1);
  REQUIRE(run("eval --data " + fx.test.string() + " --model " + svm_model.string() + " --scnn " +
              scnn_model.string() + " --out " + (fx.dir / "svm.csv").string()) == 0);
  const auto svm_rows = lines_of(slurp(fx.dir / "svm.csv"));
  REQUIRE(svm_rows.size() == 2);
  CHECK(svm_rows[1].rfind("all,scnn_svm,", 0) == 0);
}

TEST_CASE("cross validation emits exactly ten rows", "[cli]") {
  const DatasetFixture fx;
  const fs::path metrics = fx.dir / "cv.csv";
  // --cv needs --method
  CHECK(run("eval --data " + fx.train.string() + " --cv --out " + metrics.string()) == 1);
  REQUIRE(run("eval --data " + fx.train.string() + " --cv --method helm --out " +
              metrics.string() + kTinyHelm) == 0);
  const auto rows = lines_of(slurp(metrics));
  REQUIRE(rows.size() == 11);  // header + 10 splits
  for (int i = 1; i <= 10; ++i) {
    CHECK(rows[static_cast<std::size_t>(i)].rfind(std::to_string(i) + ",helm,", 0) == 0);
  }
}

TEST_CASE("identical seeded runs produce identical artifacts", "[cli]") {
  const fs::path dir = temp_dir("repro");
  for (const char* tag : {"a", "b"}) {
    const fs::path sub = dir / tag;
    fs::create_directories(sub);
    REQUIRE(run("dataset --texture --patch-size 16 --train-count 80 --test-count 32 --seed 7"
                " --out " + (sub / "train.aerd").string() +
                " --out-test " + (sub / "test.aerd").string()) == 0);
    REQUIRE(run("train --data " + (sub / "train.aerd").string() + " --method helm --seed 7"
                " --out " + (sub / "helm.aerd").string() + kTinyHelm) == 0);
    REQUIRE(run("eval --data " + (sub / "test.aerd").string() + " --model " +
                (sub / "helm.aerd").string() + " --out " + (sub / "m.csv").string()) == 0);
  }
  CHECK(slurp(dir / "a" / "train.aerd") == slurp(dir / "b" / "train.aerd"));
  CHECK(slurp(dir / "a" / "helm.aerd") == slurp(dir / "b" / "helm.aerd"));
  CHECK(slurp(dir / "a" / "m.csv") == slurp(dir / "b" / "m.csv"));
  CHECK_FALSE(slurp(dir / "a" / "m.csv").empty());
  fs::remove_all(dir);
}

TEST_CASE("synthetic scenes mine into datasets and drive detection", "[cli]") {
  const fs::path dir = temp_dir("synth_chain");
  const fs::path scene = dir / "scene";
  REQUIRE(run("synth --out " + scene.string() +
              " --set scene.width=96 --set scene.height=72 --set scene.frames=16"
              " --set scene.pan_x=1 --seed 21") == 0);
  REQUIRE(fs::exists(scene / "scene.json"));
  REQUIRE(fs::exists(scene / "truth.jsonl"));
  REQUIRE(fs::exists(scene / "frames" / "frame_000000.png"));
  REQUIRE(fs::exists(scene / "frames" / "frame_000015.png"));

  const json meta = json::parse(slurp(scene / "scene.json"));
  CHECK(meta["width"] == 96);
  CHECK(meta["n_frames"] == 16);

  const fs::path mined = dir / "mined.aerd";
  REQUIRE(run("dataset --scenes " + scene.string() + " --stride 3 --out " + mined.string() +
              " --set detect.patch_size=16 --set detect.min_area=16"
              " --set mask.k_sigma=2.0") == 0);
  REQUIRE(fs::exists(mined));

  // train a quick model on textures at the same patch size, then detect
  REQUIRE(run("dataset --texture --patch-size 16 --train-count 60 --test-count 12 --out " +
              (dir / "tex.aerd").string()) == 0);
  REQUIRE(run("train --data " + (dir / "tex.aerd").string() + " --method helm --out " +
              (dir / "helm.aerd").string() + kTinyHelm) == 0);
  const fs::path out = dir / "annotated";
  REQUIRE(run("detect --frames " + (scene / "frames").string() + " --model " +
              (dir / "helm.aerd").string() + " --out " + out.string() +
              " --set detect.min_area=16 --set mask.k_sigma=2.0") == 0);
  REQUIRE(fs::exists(out / "detections.jsonl"));
  REQUIRE(fs::exists(out / "frame_000000.png"));
  REQUIRE(fs::exists(out / "frame_000015.png"));

  // every jsonl line parses; humans never appear without a frame
  std::istringstream jl(slurp(out / "detections.jsonl"));
  std::string line;
  while (std::getline(jl, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    CHECK(rec["frame"].is_number_integer());
    CHECK((rec["class"] == "candidate" || rec["class"] == "human"));
    CHECK(rec["box"].size() == 4);
  }
  fs::remove_all(dir);
}
