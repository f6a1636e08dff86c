#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fseg/config.hpp"
#include "fseg/dataset.hpp"
#include "fseg/deepsegface.hpp"
#include "fseg/eval.hpp"
#include "fseg/proposals.hpp"
#include "fseg/segface.hpp"
#include "fseg/synth.hpp"
#include "fseg/weakdet.hpp"

namespace fseg {

// ---------------------------------------------------------------------------
// Data.

inline std::string split_dir(const RunConfig& c, const std::string& split) {
  return (std::filesystem::path(c.data_dir) / split).string();
}

inline SynthSpec split_spec(const RunConfig& c, const std::string& split) {
  SynthSpec s = c.synth;
  s.count = split == "train" ? c.train_count : c.test_count;
  s.seed = hash_seed(c.seed, "synth/" + split);
  return s;
}

/// Generates the train and test splits under `root`.
inline void synth_splits(const RunConfig& c, const std::string& root) {
  for (const char* split : {"train", "test"})
    synth_generate(split_spec(c, split), (std::filesystem::path(root) / split).string());
}

// ---------------------------------------------------------------------------
// Weak detectors.

inline std::pair<int, int> weak_window(const RunConfig& c, SegmentKind k) {
  const auto& s = c.layout[k];
  const int w = std::max(4, static_cast<int>(std::lround((s.u1 - s.u0) * c.weak.face_window)));
  const int h = std::max(4, static_cast<int>(std::lround((s.v1 - s.v0) * c.weak.face_window)));
  return {w, h};
}

/// A face is fully visible when clipping left it square.
inline bool full_face(const Annotation& a) { return a.face && a.face->w == a.face->h; }

struct WeakPatches {
  std::vector<GrayImageF> positives;
  std::vector<GrayImageF> negatives;
};

/// Positives are segment crops of fully visible training faces plus small
/// jittered copies; negatives are random windows, half of them drawn near the
/// face, rejected when they overlap the true segment by IoU >= 0.3.
inline WeakPatches weak_patches(const Dataset& ds, const std::vector<GrayImageF>& images, const RunConfig& c,
                                SegmentKind k) {
  const auto [ww, wh] = weak_window(c, k);
  Rng rng(hash_seed(c.seed, "weak/" + std::string(name_of(k))));
  WeakPatches out;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& a = ds.items[i];
    if (!full_face(a)) continue;
    const BoxI seg = segment_box(*a.face, k, c.layout);
    out.positives.push_back(resize_bilinear(crop(images[i], seg), ww, wh));
    const int dx = std::max(1, seg.w / 16), dy = std::max(1, seg.h / 16);
    for (int j = 0; j < c.weak.jitter; ++j) {
      const BoxI b{seg.x + rng.range(-dx, dx), seg.y + rng.range(-dy, dy), seg.w, seg.h};
      out.positives.push_back(resize_bilinear(crop(images[i], b), ww, wh));
    }
  }
  if (images.empty()) return out;
  const int target = c.weak.negatives;
  int guard = 0;
  while (static_cast<int>(out.negatives.size()) < target && guard++ < target * 50) {
    const std::size_t i = rng.below(images.size());
    const auto& img = images[i];
    const auto& a = ds.items[i];
    const double s = rng.uniform(c.weak.min_scale, c.weak.max_scale);
    const int bw = std::max(2, static_cast<int>(std::lround(ww * s)));
    const int bh = std::max(2, static_cast<int>(std::lround(wh * s)));
    if (bw > img.width || bh > img.height) continue;
    BoxI b;
    std::optional<BoxI> seg;
    if (a.face) seg = segment_box(*a.face, k, c.layout);
    if (a.face && rng.bernoulli(0.5)) {
      const BoxI& f = *a.face;
      const int x = std::clamp(f.x + rng.range(-f.w / 2, f.w), 0, img.width - bw);
      const int y = std::clamp(f.y + rng.range(-f.h / 2, f.h), 0, img.height - bh);
      b = BoxI{x, y, bw, bh};
    } else {
      b = BoxI{rng.range(0, img.width - bw), rng.range(0, img.height - bh), bw, bh};
    }
    if (seg && iou(b, *seg) >= 0.3) continue;
    out.negatives.push_back(resize_bilinear(crop(img, b), ww, wh));
  }
  return out;
}

inline std::vector<GrayImageF> load_all(const Dataset& ds) {
  std::vector<GrayImageF> out;
  out.reserve(ds.items.size());
  for (const auto& a : ds.items) out.push_back(load_gray(ds, a));
  return out;
}

inline std::vector<BoostedDetector> train_weak(const Dataset& ds, const RunConfig& c) {
  const auto images = load_all(ds);
  std::vector<BoostedDetector> out;
  for (SegmentKind k : kAllKinds) {
    const auto patches = weak_patches(ds, images, c, k);
    BoostParams bp;
    bp.rounds = c.weak.rounds;
    bp.feature_pool = c.weak.feature_pool;
    bp.seed = hash_seed(c.seed, "haar/" + std::string(name_of(k)));
    auto det = train_boosted(k, patches.positives, patches.negatives, bp);
    det.accept_threshold = c.weak.accept_frac * det.alpha_sum();
    out.push_back(std::move(det));
  }
  return out;
}

inline std::vector<SegmentDetection> detect_image(const GrayImageF& img, const std::vector<BoostedDetector>& dets,
                                                  const RunConfig& c) {
  return detect_segments(img, dets, scale_ladder(c.weak.min_scale, c.weak.scale_factor, c.weak.max_scale),
                         c.weak.stride);
}

inline DetectionsByImage detect_all(const Dataset& ds, const std::vector<BoostedDetector>& dets, const RunConfig& c) {
  DetectionsByImage out;
  for (const auto& a : ds.items) out[a.path] = detect_image(load_gray(ds, a), dets, c);
  return out;
}

// ---------------------------------------------------------------------------
// Proposals.

inline std::vector<Proposal> image_proposals(const std::string& id, const std::vector<SegmentDetection>& dets,
                                             const RunConfig& c) {
  const auto clusters = dedupe_clusters(cluster_detections(dets, c.layout, c.radius_frac));
  return generate_proposals(clusters, c.proposals, c.seed, id, c.layout);
}

/// Every image of the detection map gets an entry, possibly empty.
inline ProposalsByImage proposals_all(const DetectionsByImage& dets, const RunConfig& c) {
  ProposalsByImage out;
  for (const auto& [id, list] : dets) out[id] = image_proposals(id, list, c);
  return out;
}

inline double mean_proposals_per_image(const ProposalsByImage& props) {
  if (props.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& [id, list] : props) n += list.size();
  return static_cast<double>(n) / static_cast<double>(props.size());
}

inline std::vector<TrainingImage> training_images(const Dataset& ds, const ProposalsByImage& props, const RunConfig& c) {
  std::vector<TrainingImage> out;
  for (const auto& a : ds.items) {
    auto it = props.find(a.path);
    if (it == props.end() || it->second.empty()) continue;
    TrainingImage ti;
    ti.id = a.path;
    ti.image = load_gray(ds, a);
    ti.proposals = label_proposals(it->second, a.face, c.eval.iou_min);
    out.push_back(std::move(ti));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifiers.

inline SegFaceParams segface_params(const RunConfig& c) {
  SegFaceParams p;
  p.hog = c.hog;
  p.segment_svm = c.svm;
  p.master_svm = c.svm;
  p.master_svm.seed = hash_seed(c.svm.seed, "master");
  p.layout = c.layout;
  return p;
}

inline DeepSegFaceModel train_deep(const std::vector<TrainingImage>& train, const RunConfig& c,
                                   TrainTrace* trace = nullptr) {
  std::vector<LabeledProposal> all;
  for (const auto& ti : train) all.insert(all.end(), ti.proposals.begin(), ti.proposals.end());
  auto model = build_network<float>(c.net, hash_seed(c.seed, "net-init"));
  model.priors = build_priors(all);
  auto t = fseg::train(model, train, c.net_train);
  if (trace) *trace = std::move(t);
  return model;
}

enum class ModelKind { SegFace, DeepSegFace };

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "segface") return ModelKind::SegFace;
  if (s == "deepsegface") return ModelKind::DeepSegFace;
  fail(ErrorKind::ConfigError, "--model: expected segface or deepsegface, got '" + std::string(s) + "'");
}

inline std::string_view to_string(ModelKind m) { return m == ModelKind::SegFace ? "segface" : "deepsegface"; }

/// Scores the proposals of one image with either classifier.
struct Scorer {
  const SegFaceModel* segface = nullptr;
  const DeepSegFaceModel* deep = nullptr;

  std::optional<Detection> operator()(const GrayImageF& img, const std::vector<Proposal>& props) const {
    if (deep) return detect(*deep, img, props);
    std::vector<double> scores;
    scores.reserve(props.size());
    for (const auto& p : props) scores.push_back(score_proposal_segface(p, *segface, img));
    return argmax_detection(props, scores);
  }
};

struct DetectOutput {
  std::vector<ImageResult> results;
  ProposalsByImage proposals;
};

/// Full chain per image: segments, proposals, classifier argmax.
inline DetectOutput detect_dataset(const Dataset& ds, const std::vector<BoostedDetector>& weak, const Scorer& scorer,
                                   const RunConfig& c) {
  DetectOutput out;
  for (const auto& a : ds.items) {
    const auto img = load_gray(ds, a);
    auto props = image_proposals(a.path, detect_image(img, weak, c), c);
    ImageResult r;
    r.id = a.path;
    r.truth = a.face;
    if (auto d = scorer(img, props)) {
      r.box = d->box;
      r.score = d->score;
    }
    out.results.push_back(r);
    out.proposals[a.path] = std::move(props);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results interchange: image_id,x,y,w,h,score with empty fields when nothing
// was detected.

inline void write_results(const std::string& path, const std::vector<ImageResult>& results) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "image_id,x,y,w,h,score\n";
  for (const auto& r : results) {
    out << r.id;
    if (r.box) out << ',' << r.box->x << ',' << r.box->y << ',' << r.box->w << ',' << r.box->h << ',' << text::fmt(r.score);
    else out << ",,,,,";
    out << '\n';
  }
}

/// Truth boxes are not stored in the results file; they are joined from the
/// annotations by image id.
inline std::vector<ImageResult> read_results(const std::string& path,
                                             const std::map<std::string, std::optional<BoxI>>& truths) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, "results file " + path);
  std::vector<ImageResult> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || (lineno == 1 && t.starts_with("image_id,"))) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = text::split(t, ',');
    if (f.size() != 6) fail(ErrorKind::ParseError, where + ": expected image_id,x,y,w,h,score");
    ImageResult r;
    r.id = std::string(text::trim(f[0]));
    if (!text::trim(f[1]).empty()) {
      r.box = BoxI{text::parse<int>(f[1], where), text::parse<int>(f[2], where), text::parse<int>(f[3], where),
                   text::parse<int>(f[4], where)};
      r.score = text::parse<double>(f[5], where);
    }
    auto it = truths.find(r.id);
    if (it == truths.end()) fail(ErrorKind::MissingInput, where + ": image '" + r.id + "' has no annotation");
    r.truth = it->second;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation.

inline EvalSummary evaluate(const std::vector<ImageResult>& results, const ProposalsByImage& proposals,
                            const std::map<std::string, std::optional<BoxI>>& truths, const EvalParams& p) {
  EvalSummary s;
  s.far_target = p.far_target;
  s.prec_target = p.prec_target;
  s.iou_min = p.iou_min;
  s.curve = roc_curve(results, p.iou_min);
  s.tar_at_far = tar_at_far(results, p.far_target, p.iou_min);
  s.recall_at_precision = recall_at_precision(results, p.prec_target, p.iou_min);
  s.auc = roc_auc(results, p.iou_min);
  s.coverage_table = coverage_report(proposals, truths, p.iou_min);
  s.coverage = s.coverage_table.coverage;
  s.bottleneck_ok = bottleneck_holds(s.curve, s.coverage);
  return s;
}

/// Writes curve, summary and coverage CSVs under `dir` with the model name as
/// prefix. Throws InvariantViolation when TAR exceeds proposal coverage.
inline void write_eval(const std::string& dir, std::string_view model, const EvalSummary& s) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  const std::string m(model);
  write_curve_csv((base / (m + "_curve.csv")).string(), s.curve);
  write_summary_csv((base / (m + "_summary.csv")).string(), s);
  write_coverage_csv((base / (m + "_coverage.csv")).string(), s.coverage_table);
  if (!s.bottleneck_ok)
    fail(ErrorKind::InvariantViolation, m + ": measured TAR exceeds proposal coverage " + text::fmt(s.coverage));
}

}  // namespace fseg
