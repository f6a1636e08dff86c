#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/proposals.hpp"
#include "fseg/text.hpp"

namespace fseg {

/// Outcome of the detector on one image: at most one detection.
struct ImageResult {
  std::string id;
  std::optional<BoxI> truth;
  std::optional<BoxI> box;
  double score = 0.0;  // meaningful only when box is set

  bool has_truth() const { return truth.has_value(); }
  bool has_detection() const { return box.has_value(); }
};

struct CurvePoint {
  double threshold = 0.0;
  double tar = 0.0;  // == recall
  double far = 0.0;
  double precision = 1.0;
};

inline constexpr double kMatchIoU = 0.5;

inline bool correct(const ImageResult& r, double iou_min = kMatchIoU) {
  return r.truth && r.box && iou(*r.box, *r.truth) >= iou_min;
}

/// +inf, every distinct detection score in descending order, -inf.
inline std::vector<double> sweep_thresholds(const std::vector<ImageResult>& results) {
  std::vector<double> t;
  for (const auto& r : results)
    if (r.box) t.push_back(r.score);
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.insert(t.begin(), std::numeric_limits<double>::infinity());
  t.push_back(-std::numeric_limits<double>::infinity());
  return t;
}

/// Exact image-level ROC/PR sweep. At threshold τ a detection counts when its
/// score >= τ. TAR = correct detections on truth images / truth images;
/// FAR = detections on no-truth images / no-truth images; precision =
/// correct / all counted detections (1 when none).
inline std::vector<CurvePoint> sweep(const std::vector<ImageResult>& results, double iou_min = kMatchIoU) {
  struct Item {
    double score;
    bool tp;
    bool neg;
  };
  std::vector<Item> items;
  std::size_t n_truth = 0, n_neg = 0;
  for (const auto& r : results) {
    (r.truth ? n_truth : n_neg) += 1;
    if (r.box) items.push_back({r.score, correct(r, iou_min), !r.truth});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score > b.score; });
  std::vector<CurvePoint> out;
  std::size_t tp = 0, fp = 0, fa = 0, i = 0;
  for (double t : sweep_thresholds(results)) {
    while (i < items.size() && items[i].score >= t) {
      if (items[i].tp) ++tp;
      else ++fp;
      if (items[i].neg) ++fa;
      ++i;
    }
    CurvePoint p;
    p.threshold = t;
    p.tar = n_truth ? static_cast<double>(tp) / static_cast<double>(n_truth) : 0.0;
    p.far = n_neg ? static_cast<double>(fa) / static_cast<double>(n_neg) : 0.0;
    p.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    out.push_back(p);
  }
  return out;
}

inline std::vector<CurvePoint> roc_curve(const std::vector<ImageResult>& results, double iou_min = kMatchIoU) {
  std::size_t n_neg = 0;
  for (const auto& r : results) n_neg += !r.truth;
  if (n_neg == 0) fail(ErrorKind::NoNegativeImages, "FAR needs at least one image without a face");
  return sweep(results, iou_min);
}

inline std::vector<CurvePoint> pr_curve(const std::vector<ImageResult>& results, double iou_min = kMatchIoU) {
  return sweep(results, iou_min);
}

/// Highest TAR over sweep points with FAR <= far_target.
inline double tar_at_far(const std::vector<ImageResult>& results, double far_target = 0.01, double iou_min = kMatchIoU) {
  double best = 0.0;
  for (const auto& p : roc_curve(results, iou_min))
    if (p.far <= far_target) best = std::max(best, p.tar);
  return best;
}

/// Highest recall over sweep points with precision >= p_target (0 if none).
inline double recall_at_precision(const std::vector<ImageResult>& results, double p_target = 0.99,
                                  double iou_min = kMatchIoU) {
  double best = 0.0;
  for (const auto& p : pr_curve(results, iou_min))
    if (p.precision >= p_target && p.tar > 0.0) best = std::max(best, p.tar);
  return best;
}

/// Trapezoidal area under the ROC curve. The curve starts at (0, 0) and is
/// extended horizontally from its last point to FAR = 1.
inline double roc_auc(const std::vector<ImageResult>& results, double iou_min = kMatchIoU) {
  const auto pts = roc_curve(results, iou_min);
  double area = 0.0, px = 0.0, py = 0.0;
  for (const auto& p : pts) {
    area += (p.far - px) * 0.5 * (p.tar + py);
    px = p.far;
    py = p.tar;
  }
  area += (1.0 - px) * py;
  return area;
}

struct OverlapRow {
  double overlap;
  double positive_fraction;  // proposals with IoU >= overlap
  double negative_fraction;  // proposals with IoU < overlap
  double coverage;           // truth images with at least one proposal at IoU >= overlap
};

struct CoverageReport {
  double coverage = 0.0;
  std::vector<OverlapRow> table;
};

/// Fraction of truth images with at least one proposal at IoU >= iou_min;
/// the ceiling on any proposal-based detector's TAR.
inline double coverage_upper_bound(const ProposalsByImage& proposals, const std::map<std::string, std::optional<BoxI>>& truths,
                                   double iou_min = kMatchIoU) {
  std::size_t n = 0, hit = 0;
  for (const auto& [id, truth] : truths) {
    if (!truth) continue;
    ++n;
    auto it = proposals.find(id);
    if (it == proposals.end()) continue;
    for (const auto& p : it->second)
      if (iou(p.box, *truth) >= iou_min) {
        ++hit;
        break;
      }
  }
  return n ? static_cast<double>(hit) / static_cast<double>(n) : 0.0;
}

inline CoverageReport coverage_report(const ProposalsByImage& proposals,
                                      const std::map<std::string, std::optional<BoxI>>& truths, double iou_min = kMatchIoU,
                                      const std::vector<double>& grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
  CoverageReport rep;
  rep.coverage = coverage_upper_bound(proposals, truths, iou_min);
  std::vector<double> overlaps;
  for (const auto& [id, list] : proposals) {
    auto it = truths.find(id);
    const std::optional<BoxI> truth = it == truths.end() ? std::nullopt : it->second;
    for (const auto& p : list) overlaps.push_back(truth ? iou(p.box, *truth) : 0.0);
  }
  for (double g : grid) {
    OverlapRow row{g, 0.0, 0.0, coverage_upper_bound(proposals, truths, g)};
    if (!overlaps.empty()) {
      const auto pos = std::count_if(overlaps.begin(), overlaps.end(), [g](double o) { return o >= g; });
      row.positive_fraction = static_cast<double>(pos) / static_cast<double>(overlaps.size());
      row.negative_fraction = 1.0 - row.positive_fraction;
    }
    rep.table.push_back(row);
  }
  return rep;
}

/// True when TAR at every threshold stays at or below the proposal coverage.
inline bool bottleneck_holds(const std::vector<CurvePoint>& curve, double coverage) {
  for (const auto& p : curve)
    if (p.tar > coverage + 1e-12) return false;
  return true;
}

struct EvalSummary {
  double tar_at_far = 0.0;
  double recall_at_precision = 0.0;
  double coverage = 0.0;
  double auc = 0.0;
  double far_target = 0.01;
  double prec_target = 0.99;
  double iou_min = kMatchIoU;
  bool bottleneck_ok = true;
  std::vector<CurvePoint> curve;
  CoverageReport coverage_table;
};

inline void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "threshold,tar,far,precision,recall\n";
  for (const auto& p : curve)
    out << text::fmt(p.threshold) << ',' << text::fmt(p.tar) << ',' << text::fmt(p.far) << ',' << text::fmt(p.precision)
        << ',' << text::fmt(p.tar) << '\n';
}

inline void write_summary_csv(const std::string& path, const EvalSummary& s) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "metric,value\n";
  out << "tar_at_far_" << text::fmt(s.far_target) << ',' << text::fmt(s.tar_at_far) << '\n';
  out << "recall_at_prec_" << text::fmt(s.prec_target) << ',' << text::fmt(s.recall_at_precision) << '\n';
  out << "coverage_" << text::fmt(s.iou_min) << ',' << text::fmt(s.coverage) << '\n';
  out << "roc_auc," << text::fmt(s.auc) << '\n';
}

inline void write_coverage_csv(const std::string& path, const CoverageReport& rep) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "overlap,positive_fraction,negative_fraction,coverage\n";
  for (const auto& r : rep.table)
    out << text::fmt(r.overlap) << ',' << text::fmt(r.positive_fraction) << ',' << text::fmt(r.negative_fraction) << ','
        << text::fmt(r.coverage) << '\n';
}

}  // namespace fseg
