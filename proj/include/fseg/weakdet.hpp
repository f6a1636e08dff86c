#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/random.hpp"
#include "fseg/segments.hpp"
#include "fseg/text.hpp"

namespace fseg {

enum class HaarType { TwoHorizontal, TwoVertical, ThreeHorizontal };

inline std::string_view to_string(HaarType t) {
  switch (t) {
    case HaarType::TwoHorizontal: return "H2";
    case HaarType::TwoVertical: return "V2";
    case HaarType::ThreeHorizontal: return "H3";
  }
  return "?";
}

inline HaarType parse_haar_type(std::string_view s) {
  if (s == "H2") return HaarType::TwoHorizontal;
  if (s == "V2") return HaarType::TwoVertical;
  if (s == "H3") return HaarType::ThreeHorizontal;
  fail(ErrorKind::ParseError, "unknown Haar feature type '" + std::string(s) + "'");
}

/// A Haar-like feature in base-window pixel coordinates. `rect` is the full
/// extent; it is split into equal parts along its long axis:
///   H2: left (+) | right (-)      V2: top (+) / bottom (-)
///   H3: outer thirds (+), middle third weighted -2
/// Positive and negative areas are equal, so a constant offset cancels.
struct HaarFeature {
  HaarType type = HaarType::TwoHorizontal;
  BoxI rect;

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

// Part geometry of a feature placed at a window origin and scale.
struct PlacedFeature {
  HaarType type;
  int x, y, pw, ph;  // part width/height after scaling
};

inline PlacedFeature place(const HaarFeature& f, double scale, int win_w, int win_h) {
  const int parts_x = f.type == HaarType::TwoHorizontal ? 2 : f.type == HaarType::ThreeHorizontal ? 3 : 1;
  const int parts_y = f.type == HaarType::TwoVertical ? 2 : 1;
  int pw = std::max(1, static_cast<int>(std::lround(f.rect.w / static_cast<double>(parts_x) * scale)));
  int ph = std::max(1, static_cast<int>(std::lround(f.rect.h / static_cast<double>(parts_y) * scale)));
  pw = std::min(pw, win_w / parts_x);
  ph = std::min(ph, win_h / parts_y);
  int x = static_cast<int>(std::lround(f.rect.x * scale));
  int y = static_cast<int>(std::lround(f.rect.y * scale));
  x = std::clamp(x, 0, win_w - parts_x * pw);
  y = std::clamp(y, 0, win_h - parts_y * ph);
  return PlacedFeature{f.type, x, y, pw, ph};
}

// Unnormalized (positive - negative) response at window origin (ox, oy).
inline double raw_response(const PlacedFeature& p, const IntegralImage& ii, int ox, int oy) {
  const int x = ox + p.x, y = oy + p.y;
  switch (p.type) {
    case HaarType::TwoHorizontal:
      return ii.sum_unchecked(x, y, p.pw, p.ph) - ii.sum_unchecked(x + p.pw, y, p.pw, p.ph);
    case HaarType::TwoVertical:
      return ii.sum_unchecked(x, y, p.pw, p.ph) - ii.sum_unchecked(x, y + p.ph, p.pw, p.ph);
    case HaarType::ThreeHorizontal:
      return ii.sum_unchecked(x, y, p.pw, p.ph) + ii.sum_unchecked(x + 2 * p.pw, y, p.pw, p.ph) -
             2.0 * ii.sum_unchecked(x + p.pw, y, p.pw, p.ph);
  }
  return 0.0;
}

/// Decision stump: fires (h = 1) when polarity * value < polarity * threshold.
struct Stump {
  HaarFeature feature;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;
};

struct BoostedDetector {
  SegmentKind kind = SegmentKind::Nose;
  int window_w = 0;
  int window_h = 0;
  std::vector<Stump> stumps;
  double accept_threshold = 0.0;

  double alpha_sum() const {
    double s = 0.0;
    for (const auto& st : stumps) s += st.alpha;
    return s;
  }

  /// Σ alpha·h on a window-sized patch at unit scale.
  double score_patch(const GrayImageF& patch) const {
    const IntegralImage ii(patch);
    const double area = static_cast<double>(window_w) * window_h;
    double s = 0.0;
    for (const auto& st : stumps) {
      const double v = raw_response(place(st.feature, 1.0, window_w, window_h), ii, 0, 0) / area;
      if (st.polarity * v < st.polarity * st.threshold) s += st.alpha;
    }
    return s;
  }
};

struct BoostParams {
  int rounds = 50;
  int feature_pool = 2000;
  std::uint64_t seed = 1;
};

/// Closed-form weight of a weak learner with weighted error eps.
inline double adaboost_alpha(double eps) {
  eps = std::max(eps, 1e-10);
  return 0.5 * std::log((1.0 - eps) / eps);
}

/// Seeded sample of Haar features that fit a win_w x win_h window.
inline std::vector<HaarFeature> sample_feature_pool(int win_w, int win_h, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<HaarFeature> pool;
  pool.reserve(static_cast<std::size_t>(count));
  int guard = 0;
  while (static_cast<int>(pool.size()) < count && guard++ < count * 20) {
    const auto type = static_cast<HaarType>(rng.below(3));
    const int parts_x = type == HaarType::TwoHorizontal ? 2 : type == HaarType::ThreeHorizontal ? 3 : 1;
    const int parts_y = type == HaarType::TwoVertical ? 2 : 1;
    const int max_pw = win_w / parts_x, max_ph = win_h / parts_y;
    if (max_pw < 1 || max_ph < 1) continue;
    const int pw = rng.range(1, max_pw);
    const int ph = rng.range(1, max_ph);
    const int w = pw * parts_x, h = ph * parts_y;
    const int x = rng.range(0, win_w - w);
    const int y = rng.range(0, win_h - h);
    pool.push_back(HaarFeature{type, BoxI{x, y, w, h}});
  }
  return pool;
}

/// Discrete AdaBoost over decision stumps on a seeded Haar feature pool.
inline BoostedDetector train_boosted(SegmentKind kind, const std::vector<GrayImageF>& positives,
                                     const std::vector<GrayImageF>& negatives, const BoostParams& params) {
  if (positives.empty() || negatives.empty())
    fail(ErrorKind::DegenerateData, std::string(name_of(kind)) + ": both positive and negative patches required");
  if (positives.size() < 10 || negatives.size() < 10)
    fail(ErrorKind::DegenerateData, std::string(name_of(kind)) + ": at least 10 patches per class required");
  const int win_w = positives.front().width, win_h = positives.front().height;
  auto check = [&](const GrayImageF& p) {
    if (p.width != win_w || p.height != win_h)
      fail(ErrorKind::DimensionMismatch, std::string(name_of(kind)) + ": all patches must match the detector window");
  };
  for (const auto& p : positives) check(p);
  for (const auto& p : negatives) check(p);

  const std::size_t n = positives.size() + negatives.size();
  std::vector<int> label(n);
  std::vector<IntegralImage> iis;
  iis.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i < positives.size();
    label[i] = pos ? 1 : -1;
    iis.emplace_back(pos ? positives[i] : negatives[i - positives.size()]);
  }

  const auto pool = sample_feature_pool(win_w, win_h, params.feature_pool, params.seed);
  const double area = static_cast<double>(win_w) * win_h;
  const std::size_t nf = pool.size();
  std::vector<float> values(nf * n);
  std::vector<std::uint32_t> order(nf * n);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto placed = place(pool[f], 1.0, win_w, win_h);
    float* row = &values[f * n];
    for (std::size_t i = 0; i < n; ++i) row[i] = static_cast<float>(raw_response(placed, iis[i], 0, 0) / area);
    std::uint32_t* ord = &order[f * n];
    std::iota(ord, ord + n, 0u);
    std::stable_sort(ord, ord + n, [row](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
  }

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = label[i] > 0 ? 0.5 / static_cast<double>(positives.size()) : 0.5 / static_cast<double>(negatives.size());

  BoostedDetector det;
  det.kind = kind;
  det.window_w = win_w;
  det.window_h = win_h;

  for (int round = 0; round < params.rounds; ++round) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;
    double t_pos = 0.0, t_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (label[i] > 0 ? t_pos : t_neg) += w[i];

    double best_err = 1.0;
    std::size_t best_f = 0;
    double best_thr = 0.0;
    int best_pol = 1;
    for (std::size_t f = 0; f < nf; ++f) {
      const float* row = &values[f * n];
      const std::uint32_t* ord = &order[f * n];
      double s_pos = 0.0, s_neg = 0.0;  // weight strictly below the candidate threshold
      for (std::size_t j = 0; j <= n; ++j) {
        if (j == 0 || j == n || row[ord[j - 1]] < row[ord[j]]) {
          // polarity +1 predicts positive below the threshold, -1 above it
          const double e_plus = s_neg + (t_pos - s_pos);
          const double e_minus = s_pos + (t_neg - s_neg);
          const double e = std::min(e_plus, e_minus);
          if (e < best_err) {
            best_err = e;
            best_f = f;
            best_pol = e_plus <= e_minus ? 1 : -1;
            if (j == 0) best_thr = row[ord[0]] - 1.0;
            else if (j == n) best_thr = row[ord[n - 1]] + 1.0;
            else best_thr = 0.5 * (static_cast<double>(row[ord[j - 1]]) + row[ord[j]]);
          }
        }
        if (j < n) (label[ord[j]] > 0 ? s_pos : s_neg) += w[ord[j]];
      }
    }
    if (best_err >= 0.5 - 1e-12) break;
    const double alpha = adaboost_alpha(best_err);
    det.stumps.push_back(Stump{pool[best_f], best_thr, best_pol, alpha});

    const float* row = &values[best_f * n];
    for (std::size_t i = 0; i < n; ++i) {
      const bool fires = best_pol * static_cast<double>(row[i]) < best_pol * best_thr;
      const int h = fires ? 1 : -1;
      w[i] *= std::exp(-alpha * label[i] * h);
    }
    if (best_err <= 1e-10) break;  // training set already separated
  }
  if (det.stumps.empty())
    fail(ErrorKind::NoUsefulFeature, std::string(name_of(kind)) + ": no stump beats chance");
  det.accept_threshold = 0.5 * det.alpha_sum();
  return det;
}

/// Geometric scale ladder min_scale, min_scale*factor, ... up to max_scale.
inline std::vector<double> scale_ladder(double min_scale, double factor, double max_scale) {
  if (!(factor > 1.0)) fail(ErrorKind::ConfigError, "weak.scale_factor must be > 1");
  if (!(min_scale > 0.0)) fail(ErrorKind::ConfigError, "weak.min_scale must be > 0");
  std::vector<double> out;
  for (double s = min_scale; s <= max_scale * (1.0 + 1e-9); s *= factor) out.push_back(s);
  return out;
}

/// Greedy non-maximum suppression within each kind: a detection is dropped
/// when it overlaps an already kept, higher-scoring detection by IoU > thr.
inline std::vector<SegmentDetection> nms_per_kind(std::vector<SegmentDetection> dets, double thr = 0.5) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const SegmentDetection& a, const SegmentDetection& b) { return a.score > b.score; });
  std::vector<SegmentDetection> kept;
  for (const auto& d : dets) {
    bool keep = true;
    for (const auto& k : kept)
      if (k.kind == d.kind && iou(k.box, d.box) > thr) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(d);
  }
  return kept;
}

/// Sliding-window scan of every detector over every scale. Emitted scores are
/// Σ alpha·h − accept_threshold (>= 0).
inline std::vector<SegmentDetection> detect_segments(const GrayImageF& img, const std::vector<BoostedDetector>& detectors,
                                                     const std::vector<double>& scales, int stride) {
  if (scales.empty()) fail(ErrorKind::ConfigError, "scale ladder is empty");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] > scales[i - 1])) fail(ErrorKind::ConfigError, "scale ladder must be strictly increasing");
  stride = std::max(stride, 1);
  const IntegralImage ii(img);
  std::vector<SegmentDetection> raw;
  for (const auto& det : detectors) {
    const std::size_t ns = det.stumps.size();
    std::vector<double> tail(ns + 1, 0.0);  // alpha mass of stumps i..end
    for (std::size_t i = ns; i-- > 0;) tail[i] = tail[i + 1] + det.stumps[i].alpha;
    for (double s : scales) {
      const int ww = static_cast<int>(std::lround(det.window_w * s));
      const int wh = static_cast<int>(std::lround(det.window_h * s));
      if (ww > img.width || wh > img.height || ww < 1 || wh < 1) continue;
      const double area = static_cast<double>(ww) * wh;
      std::vector<PlacedFeature> placed;
      std::vector<double> thr;
      placed.reserve(ns);
      for (const auto& st : det.stumps) {
        placed.push_back(place(st.feature, s, ww, wh));
        thr.push_back(st.threshold * area);
      }
      for (int y = 0; y + wh <= img.height; y += stride) {
        for (int x = 0; x + ww <= img.width; x += stride) {
          double score = 0.0;
          std::size_t i = 0;
          for (; i < ns; ++i) {
            if (score + tail[i] < det.accept_threshold) break;  // cannot reach threshold
            const double v = raw_response(placed[i], ii, x, y);
            if (det.stumps[i].polarity * v < det.stumps[i].polarity * thr[i]) score += det.stumps[i].alpha;
          }
          if (i == ns && score >= det.accept_threshold)
            raw.push_back(SegmentDetection{det.kind, BoxI{x, y, ww, wh}, score - det.accept_threshold});
        }
      }
    }
  }
  return nms_per_kind(std::move(raw), 0.5);
}

// ---------------------------------------------------------------------------
// Detection interchange format: image_id,kind,x,y,w,h,score

using DetectionsByImage = std::map<std::string, std::vector<SegmentDetection>>;

inline std::string format_detection(const std::string& image_id, const SegmentDetection& d) {
  std::ostringstream os;
  os << image_id << ',' << name_of(d.kind) << ',' << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h
     << ',' << text::fmt(d.score);
  return os.str();
}

inline void write_detections(std::ostream& out, const DetectionsByImage& dets) {
  out << "# image_id,kind,x,y,w,h,score\n";
  for (const auto& [id, list] : dets)
    for (const auto& d : list) out << format_detection(id, d) << '\n';
}

inline void export_detections(const std::string& path, const DetectionsByImage& dets) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  write_detections(out, dets);
}

inline DetectionsByImage read_detections(std::istream& in, const std::string& source) {
  DetectionsByImage out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = text::split(t, ',');
    const std::string where = source + ":" + std::to_string(lineno);
    if (f.size() != 7) fail(ErrorKind::ParseError, where + ": expected 7 fields");
    const auto kind = try_parse_kind(text::trim(f[1]));
    if (!kind) fail(ErrorKind::UnknownSegmentKind, where + ": unknown segment kind '" + std::string(f[1]) + "'");
    SegmentDetection d;
    d.kind = *kind;
    int v[4];
    for (int i = 0; i < 4; ++i)
      if (!text::try_parse(f[static_cast<std::size_t>(2 + i)], v[i])) fail(ErrorKind::ParseError, where + ": bad box field");
    d.box = BoxI{v[0], v[1], v[2], v[3]};
    if (d.box.w <= 0 || d.box.h <= 0) fail(ErrorKind::ParseError, where + ": box extent must be positive");
    if (!text::try_parse(f[6], d.score) || !std::isfinite(d.score)) fail(ErrorKind::ParseError, where + ": bad score");
    out[std::string(text::trim(f[0]))].push_back(d);
  }
  return out;
}

inline DetectionsByImage import_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, path);
  return read_detections(in, path);
}

// ---------------------------------------------------------------------------
// Detector model file.

inline void save_detectors(const std::string& path, const std::vector<BoostedDetector>& dets) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "WEAKDET-MODEL v1\n";
  for (const auto& d : dets) {
    out << "[detector kind=" << name_of(d.kind) << "]\n";
    out << "window=" << d.window_w << ',' << d.window_h << '\n';
    out << "accept_threshold=" << text::fmt(d.accept_threshold) << '\n';
    for (const auto& s : d.stumps) {
      out << "stump=" << to_string(s.feature.type) << ',' << s.feature.rect.x << ',' << s.feature.rect.y << ','
          << s.feature.rect.w << ',' << s.feature.rect.h << ',' << text::fmt(s.threshold) << ',' << s.polarity << ','
          << text::fmt(s.alpha) << '\n';
    }
  }
}

inline std::vector<BoostedDetector> load_detectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, path);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "WEAKDET-MODEL v1")
    fail(ErrorKind::ModelVersionMismatch, path + ": expected 'WEAKDET-MODEL v1' header");
  std::vector<BoostedDetector> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (t.empty() || t.front() == '#') continue;
    if (t.starts_with("[detector kind=")) {
      const auto name = t.substr(15, t.size() - 16);
      out.push_back(BoostedDetector{});
      out.back().kind = parse_kind(name);
      continue;
    }
    if (out.empty()) fail(ErrorKind::ParseError, where + ": field outside a detector section");
    auto& d = out.back();
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::ParseError, where + ": expected key=value");
    const auto key = t.substr(0, eq), val = t.substr(eq + 1);
    if (key == "window") {
      const auto v = text::parse_list<int>(val, ',', where);
      if (v.size() != 2) fail(ErrorKind::ParseError, where + ": window needs w,h");
      d.window_w = v[0];
      d.window_h = v[1];
    } else if (key == "accept_threshold") {
      d.accept_threshold = text::parse<double>(val, where);
    } else if (key == "stump") {
      const auto f = text::split(val, ',');
      if (f.size() != 8) fail(ErrorKind::ParseError, where + ": stump needs 8 fields");
      Stump s;
      s.feature.type = parse_haar_type(f[0]);
      s.feature.rect = BoxI{text::parse<int>(f[1], where), text::parse<int>(f[2], where), text::parse<int>(f[3], where),
                            text::parse<int>(f[4], where)};
      s.threshold = text::parse<double>(f[5], where);
      s.polarity = text::parse<int>(f[6], where);
      s.alpha = text::parse<double>(f[7], where);
      d.stumps.push_back(s);
    } else {
      fail(ErrorKind::ParseError, where + ": unknown key '" + std::string(key) + "'");
    }
  }
  return out;
}

}  // namespace fseg
