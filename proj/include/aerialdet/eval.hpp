#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "aerialdet/classifiers.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/image_io.hpp"
#include "aerialdet/pipeline.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/sample.hpp"

namespace aerialdet {

struct ConfusionMatrix {
  long long tp = 0, fp = 0, tn = 0, fn = 0;

  long long total() const { return tp + fp + tn + fn; }
  double accuracy_pct() const {
    if (total() == 0) throw ConfigError("ConfusionMatrix: empty");
    return 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

struct CvSplit {
  std::array<int, 4> test_persons{};

  bool is_test_person(int pid) const {
    return std::find(test_persons.begin(), test_persons.end(), pid) != test_persons.end();
  }

  std::vector<int> train_persons() const {
    std::vector<int> out;
    for (int p = 1; p <= 12; ++p) {
      if (!is_test_person(p)) out.push_back(p);
    }
    return out;
  }
};

// The fixed ten leave-four-person-out test groups, in reporting order.
inline std::vector<CvSplit> leave_four_out_splits() {
  return {
      CvSplit{{1, 2, 3, 4}},  CvSplit{{5, 6, 7, 8}},  CvSplit{{9, 10, 11, 12}},
      CvSplit{{1, 3, 5, 7}},  CvSplit{{2, 4, 6, 8}},  CvSplit{{1, 4, 7, 10}},
      CvSplit{{2, 5, 8, 11}}, CvSplit{{3, 6, 9, 12}}, CvSplit{{1, 5, 9, 12}},
      CvSplit{{1, 6, 11, 12}},
  };
}

struct EvalResult {
  double accuracy_pct = 0.0;
  ConfusionMatrix cm;
};

inline EvalResult evaluate(const PatchClassifier& clf, const std::vector<LabeledSample>& test) {
  if (test.empty()) throw ConfigError("evaluate: empty test set");
  EvalResult r;
  for (const LabeledSample& s : test) {
    const int pred = clf.classify(s.patch).first;
    if (s.label == 1) {
      (pred == 1 ? r.cm.tp : r.cm.fn) += 1;
    } else {
      (pred == 1 ? r.cm.fp : r.cm.tn) += 1;
    }
  }
  r.accuracy_pct = r.cm.accuracy_pct();
  return r;
}

using TrainerFn = std::function<std::unique_ptr<PatchClassifier>(
    const std::vector<LabeledSample>& train, std::uint64_t seed)>;

struct CvRow {
  CvSplit split;
  double accuracy_pct = 0.0;
  ConfusionMatrix cm;
  std::size_t n_train = 0, n_test = 0;
  double train_s = 0.0, test_s_per_sample = 0.0;
};

struct CvResult {
  std::vector<CvRow> rows;
  double mean_accuracy_pct = 0.0;
};

// Trains on the eight held-in persons, tests on the four held-out ones.
// Samples with person_id 0 belong to no subject and always train.
// measure_time keeps wall-clock columns at zero unless requested, so the
// emitted CSV is byte-stable across runs.
inline CvResult cross_validate(const std::vector<LabeledSample>& data, const TrainerFn& trainer,
                               const std::vector<CvSplit>& splits, std::uint64_t master_seed,
                               bool measure_time = false) {
  if (splits.empty()) throw ConfigError("cross_validate: no splits");
  std::set<int> persons_present;
  for (const LabeledSample& s : data) persons_present.insert(s.person_id);
  for (const CvSplit& split : splits) {
    for (int p : split.test_persons) {
      if (!persons_present.count(p)) {
        throw ConfigError("cross_validate: dataset has no samples for person " +
                          std::to_string(p));
      }
    }
  }

  CvResult res;
  double acc_sum = 0.0;
  for (std::size_t si = 0; si < splits.size(); ++si) {
    const CvSplit& split = splits[si];
    std::vector<LabeledSample> train, test;
    for (const LabeledSample& s : data) {
      (split.is_test_person(s.person_id) ? test : train).push_back(s);
    }
    // leakage guard: no test person may contribute a training sample
    for (const LabeledSample& s : train) {
      if (split.is_test_person(s.person_id)) {
        throw StateError("cross_validate: test person leaked into training set");
      }
    }
    if (test.empty() || train.empty()) {
      throw ConfigError("cross_validate: split produced an empty side");
    }
    CvRow row;
    row.split = split;
    row.n_train = train.size();
    row.n_test = test.size();
    const auto t0 = std::chrono::steady_clock::now();
    const std::unique_ptr<PatchClassifier> clf =
        trainer(train, derive_seed(master_seed, "cv.split", si));
    const auto t1 = std::chrono::steady_clock::now();
    const EvalResult er = evaluate(*clf, test);
    const auto t2 = std::chrono::steady_clock::now();
    row.accuracy_pct = er.accuracy_pct;
    row.cm = er.cm;
    if (measure_time) {
      row.train_s = std::chrono::duration<double>(t1 - t0).count();
      row.test_s_per_sample =
          std::chrono::duration<double>(t2 - t1).count() / static_cast<double>(test.size());
    }
    acc_sum += row.accuracy_pct;
    res.rows.push_back(std::move(row));
  }
  res.mean_accuracy_pct = acc_sum / static_cast<double>(res.rows.size());
  return res;
}

// A video with per-frame ground-truth human boxes, ready for dataset mining.
struct VideoForDataset {
  std::vector<GrayFrame> frames;
  std::vector<std::vector<BoundingBox>> human_boxes;  // per frame index
  int person_id = 0;
  std::string activity;
};

// Runs the motion detector on every stride-th frame pair and labels each
// candidate box human iff it overlaps a ground-truth human box with
// iou >= 0.5.
inline std::vector<LabeledSample> build_patch_dataset(const std::vector<VideoForDataset>& videos,
                                                      const DetectorConfig& cfg,
                                                      int frame_stride = 10) {
  if (frame_stride < 1) throw ConfigError("build_patch_dataset: frame_stride must be >= 1");
  cfg.validate();
  std::vector<LabeledSample> out;
  for (const VideoForDataset& video : videos) {
    if (video.human_boxes.size() != video.frames.size()) {
      throw DimensionError("build_patch_dataset: ground truth does not align with frames");
    }
    for (std::size_t i = static_cast<std::size_t>(frame_stride); i < video.frames.size();
         i += static_cast<std::size_t>(frame_stride)) {
      const std::vector<BoundingBox> boxes =
          detect_moving_objects(video.frames[i - 1], video.frames[i], cfg);
      const PatchExtraction ex = extract_patches(video.frames[i], boxes, cfg.patch_size);
      for (const Patch& p : ex.patches) {
        double best_iou = 0.0;
        for (const BoundingBox& gt : video.human_boxes[i]) {
          best_iou = std::max(best_iou, iou(p.box, gt));
        }
        LabeledSample s;
        s.patch = p.img;
        s.label = best_iou >= 0.5 ? 1 : 0;
        s.person_id = video.person_id;
        s.activity = video.activity;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

struct BenchTrainer {
  std::string name;
  std::function<std::unique_ptr<PatchClassifier>(const std::vector<LabeledSample>&)> fit;
};

struct BenchRow {
  std::string method;
  double train_s = 0.0;
  double test_s_per_sample = 0.0;
  double accuracy_pct = 0.0;
  ConfusionMatrix cm;
};

// Wall-clock training and per-sample prediction times. A small warm-up fit
// and a few predictions run first and are not timed; prediction time is
// averaged over at least min_predictions patch classifications (cycling the
// test set as needed).
inline std::vector<BenchRow> benchmark_timing(const std::vector<BenchTrainer>& trainers,
                                              const std::vector<LabeledSample>& train,
                                              const std::vector<LabeledSample>& test,
                                              std::size_t min_predictions = 1000) {
  if (trainers.empty()) throw ConfigError("benchmark_timing: no trainers");
  if (train.empty() || test.empty()) throw ConfigError("benchmark_timing: empty dataset");
  std::vector<BenchRow> rows;
  for (const BenchTrainer& tr : trainers) {
    const std::size_t warm_n = std::min<std::size_t>(train.size(), 32);
    {
      const std::vector<LabeledSample> warm_set(
          train.begin(), train.begin() + static_cast<std::ptrdiff_t>(warm_n));
      const auto warm_clf = tr.fit(warm_set);
      warm_clf->classify(test[0].patch);
    }
    BenchRow row;
    row.method = tr.name;
    const auto t0 = std::chrono::steady_clock::now();
    const auto clf = tr.fit(train);
    const auto t1 = std::chrono::steady_clock::now();
    row.train_s = std::chrono::duration<double>(t1 - t0).count();

    std::size_t n_pred = 0;
    const auto t2 = std::chrono::steady_clock::now();
    while (n_pred < min_predictions) {
      for (const LabeledSample& s : test) {
        clf->classify(s.patch);
        if (++n_pred >= min_predictions) break;
      }
    }
    const auto t3 = std::chrono::steady_clock::now();
    row.test_s_per_sample =
        std::chrono::duration<double>(t3 - t2).count() / static_cast<double>(n_pred);

    const EvalResult er = evaluate(*clf, test);
    row.accuracy_pct = er.accuracy_pct;
    row.cm = er.cm;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct MetricsRow {
  std::string split;  // "1".."10", "all", "mean", or "bench"
  std::string method;
  double accuracy_pct = 0.0;
  ConfusionMatrix cm;
  double train_s = 0.0;
  double test_s_per_sample = 0.0;
};

// Header: split,method,accuracy,tp,fp,tn,fn,train_s,test_s_per_sample.
// Fixed formatting (no locale involvement) keeps byte-identical output for
// identical inputs.
inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsRow>& rows) {
  detail::AtomicFileWriter w(path);
  w.stream() << "split,method,accuracy,tp,fp,tn,fn,train_s,test_s_per_sample\n";
  char buf[160];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.4f,%lld,%lld,%lld,%lld,%.6f,%.9f", r.accuracy_pct, r.cm.tp,
                  r.cm.fp, r.cm.tn, r.cm.fn, r.train_s, r.test_s_per_sample);
    w.stream() << r.split << "," << r.method << "," << buf << "\n";
  }
  w.commit();
}

}  // namespace aerialdet
