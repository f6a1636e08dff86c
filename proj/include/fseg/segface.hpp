#pragma once

#include <array>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/hog.hpp"
#include "fseg/imaging.hpp"
#include "fseg/priors.hpp"
#include "fseg/proposals.hpp"
#include "fseg/sections.hpp"
#include "fseg/segments.hpp"
#include "fseg/svm.hpp"
#include "fseg/text.hpp"

namespace fseg {

inline constexpr int kSegFaceDim = 3 * kNumSegments + 2;

/// Proposals of one image together with its pixels; the unit of training data
/// for both classifiers.
struct TrainingImage {
  std::string id;
  GrayImageF image;
  std::vector<LabeledProposal> proposals;
};

struct SegFaceModel {
  HogParams hog;
  std::array<LinearModel, kNumSegments> per_segment;
  LinearModel master;
  PriorTable priors;
  SegmentLayout layout;
};

struct SegFaceParams {
  HogParams hog;
  SvmParams segment_svm;
  SvmParams master_svm;
  SegmentLayout layout = default_layout(Scale::Toy);
};

/// Segment pixels cropped (zero-padded) and resampled to the kind's canonical size.
inline GrayImageF segment_patch(const GrayImageF& image, const SegmentDetection& det, const SegmentLayout& layout) {
  const auto& s = layout[det.kind];
  return resize_bilinear(crop(image, det.box), s.canon_w, s.canon_h);
}

inline std::vector<double> segment_hog(const GrayImageF& image, const SegmentDetection& det, const SegmentLayout& layout,
                                       const HogParams& hp) {
  return hog(segment_patch(image, det, layout), hp);
}

/// F = [F_C ; F_S]: per-segment SVM margins (0 for absent kinds) followed by
/// the 2M+2 prior features.
inline std::vector<double> build_feature_vector(const Proposal& p, const SegFaceModel& model, const GrayImageF& image) {
  std::vector<double> f(kSegFaceDim, 0.0);
  for (SegmentKind k : kAllKinds) {
    if (!p.has(k)) continue;
    const auto& svm = model.per_segment[static_cast<std::size_t>(index_of(k))];
    f[static_cast<std::size_t>(index_of(k))] = svm.margin(segment_hog(image, p.at(k), model.layout, model.hog));
  }
  const auto prior = prior_features(p, model.priors);
  std::copy(prior.begin(), prior.end(), f.begin() + kNumSegments);
  return f;
}

inline double score_proposal_segface(const Proposal& p, const SegFaceModel& model, const GrayImageF& image) {
  return model.master.margin(build_feature_vector(p, model, image));
}

/// Two-stage training: per-kind SVMs on HoG of segment patches (face proposal
/// segments positive, non-face proposal segments negative), then the master
/// SVM on the 29-D vectors of all training proposals.
inline SegFaceModel train_segface(const std::vector<TrainingImage>& train, const SegFaceParams& params) {
  validate(params.hog);
  std::vector<LabeledProposal> all;
  for (const auto& ti : train) all.insert(all.end(), ti.proposals.begin(), ti.proposals.end());

  SegFaceModel model;
  model.hog = params.hog;
  model.layout = params.layout;
  model.priors = build_priors(all);

  // Stage 1. One sample per distinct (image, segment box, label).
  for (SegmentKind k : kAllKinds) {
    const auto& spec = params.layout[k];
    const std::size_t dim = hog_length(spec.canon_w, spec.canon_h, params.hog);
    std::map<std::tuple<std::size_t, BoxI, int>, bool> seen;
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (const auto& lp : train[i].proposals) {
        if (!lp.proposal.has(k)) continue;
        const int label = lp.label == Label::Face ? 1 : -1;
        const auto& det = lp.proposal.at(k);
        if (!seen.emplace(std::tuple{i, det.box, label}, true).second) continue;
        X.push_back(segment_hog(train[i].image, det, params.layout, params.hog));
        y.push_back(label);
      }
    }
    const bool pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool neg = std::find(y.begin(), y.end(), -1) != y.end();
    auto& out = model.per_segment[static_cast<std::size_t>(index_of(k))];
    if (pos && neg) {
      SvmParams sp = params.segment_svm;
      sp.seed = params.segment_svm.seed + static_cast<std::uint64_t>(index_of(k));
      out = train_linear_svm(X, y, sp);
    } else {
      out = LinearModel::zero(dim);  // kind never seen with both labels
    }
  }

  // Stage 2.
  std::vector<std::vector<double>> F;
  std::vector<int> Y;
  for (const auto& ti : train) {
    for (const auto& lp : ti.proposals) {
      F.push_back(build_feature_vector(lp.proposal, model, ti.image));
      Y.push_back(lp.label == Label::Face ? 1 : -1);
    }
  }
  if (std::find(Y.begin(), Y.end(), 1) == Y.end() || std::find(Y.begin(), Y.end(), -1) == Y.end())
    fail(ErrorKind::DegenerateTrainingSet, "SegFace training needs face and non-face proposals");
  model.master = train_linear_svm(F, Y, params.master_svm);
  return model;
}

// ---------------------------------------------------------------------------
// Serialization.

inline void write_layout(std::ostream& out, const SegmentLayout& layout) {
  for (SegmentKind k : kAllKinds) {
    const auto& s = layout[k];
    out << name_of(k) << '=' << text::fmt(s.u0) << ',' << text::fmt(s.v0) << ',' << text::fmt(s.u1) << ','
        << text::fmt(s.v1) << ',' << s.canon_h << ',' << s.canon_w << '\n';
  }
}

inline SegmentSpec parse_segment_spec(std::string_view val, const std::string& where) {
  const auto v = text::parse_list<double>(val, ',', where);
  if (v.size() != 6 && v.size() != 4) fail(ErrorKind::ParseError, where + ": layout entry needs u0,v0,u1,v1[,h,w]");
  SegmentSpec s;
  s.u0 = v[0];
  s.v0 = v[1];
  s.u1 = v[2];
  s.v1 = v[3];
  if (v.size() == 6) {
    s.canon_h = static_cast<int>(v[4]);
    s.canon_w = static_cast<int>(v[5]);
  }
  return s;
}

inline SegmentLayout read_layout(const Section& sec) {
  SegmentLayout layout;
  std::array<bool, kNumSegments> got{};
  for (std::size_t i = 0; i < sec.entries.size(); ++i) {
    const auto& [k, v] = sec.entries[i];
    const auto kind = parse_kind(k);
    layout[kind] = parse_segment_spec(v, sec.where(i));
    got[static_cast<std::size_t>(index_of(kind))] = true;
  }
  for (bool g : got)
    if (!g) fail(ErrorKind::ParseError, sec.source + ": [layout] must list all nine segments");
  validate(layout);
  return layout;
}

inline void write_linear(std::ostream& out, const LinearModel& m) {
  out << "dim=" << m.dim() << '\n' << "bias=" << text::fmt(m.bias) << '\n';
  out << "weights=" << text::join(m.weights, ' ') << '\n';
}

inline LinearModel read_linear(const Section& sec) {
  LinearModel m;
  const auto dim = text::parse<std::size_t>(sec.get("dim"), sec.source + " dim");
  m.bias = text::parse<double>(sec.get("bias"), sec.source + " bias");
  m.weights = text::parse_list<double>(sec.get("weights"), ' ', sec.source + " weights");
  if (m.weights.size() != dim) fail(ErrorKind::ParseError, sec.source + ": weight count does not match dim");
  return m;
}

inline void save_segface(const std::string& path, const SegFaceModel& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "SEGFACE-MODEL v1\n";
  out << "[hog]\n"
      << "cell=" << m.hog.cell << "\nblock=" << m.hog.block << "\nbins=" << m.hog.bins
      << "\nblock_stride=" << m.hog.block_stride << "\nclip=" << text::fmt(m.hog.clip) << '\n';
  for (SegmentKind k : kAllKinds) {
    out << "[svm kind=" << name_of(k) << "]\n";
    write_linear(out, m.per_segment[static_cast<std::size_t>(index_of(k))]);
  }
  out << "[master]\n";
  write_linear(out, m.master);
  out << "[priors]\n";
  write_priors(out, m.priors);
  out << "[layout]\n";
  write_layout(out, m.layout);
}

inline SegFaceModel load_segface(const std::string& path) {
  SegFaceModel m;
  std::array<bool, kNumSegments> got{};
  bool master = false, priors = false, layout = false, hog_seen = false;
  for (const auto& sec : read_sections(path, "SEGFACE-MODEL v1")) {
    if (sec.name == "hog") {
      m.hog.cell = text::parse<int>(sec.get("cell"), path + " hog.cell");
      m.hog.block = text::parse<int>(sec.get("block"), path + " hog.block");
      m.hog.bins = text::parse<int>(sec.get("bins"), path + " hog.bins");
      m.hog.block_stride = text::parse<int>(sec.get("block_stride"), path + " hog.block_stride");
      m.hog.clip = text::parse<double>(sec.get("clip"), path + " hog.clip");
      hog_seen = true;
    } else if (sec.name == "svm") {
      const auto k = parse_kind(sec.attr("kind"));
      m.per_segment[static_cast<std::size_t>(index_of(k))] = read_linear(sec);
      got[static_cast<std::size_t>(index_of(k))] = true;
    } else if (sec.name == "master") {
      m.master = read_linear(sec);
      master = true;
    } else if (sec.name == "priors") {
      for (std::size_t i = 0; i < sec.entries.size(); ++i)
        if (!read_prior_field(m.priors, sec.entries[i].first, sec.entries[i].second, sec.where(i)))
          fail(ErrorKind::ParseError, sec.where(i) + ": unknown priors key");
      priors = true;
    } else if (sec.name == "layout") {
      m.layout = read_layout(sec);
      layout = true;
    } else {
      fail(ErrorKind::ParseError, path + ": unknown section [" + sec.name + "]");
    }
  }
  for (bool g : got)
    if (!g) fail(ErrorKind::ParseError, path + ": missing per-segment SVM section");
  if (!master || !priors || !layout || !hog_seen) fail(ErrorKind::ParseError, path + ": incomplete model file");
  if (m.master.dim() != static_cast<std::size_t>(kSegFaceDim))
    fail(ErrorKind::ParseError, path + ": master SVM must have dim 29");
  return m;
}

}  // namespace fseg
