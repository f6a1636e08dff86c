#pragma once

#include <array>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/proposals.hpp"
#include "fseg/segments.hpp"
#include "fseg/text.hpp"

namespace fseg {

inline constexpr int kPriorDim = 2 * kNumSegments + 2;

/// Empirical frequencies of segment combinations and of single segments among
/// face and non-face training proposals. Combination entries are keyed by the
/// exact segment bitmask; unseen masks read as zero.
struct PriorTable {
  std::map<SegmentMask, double> combo_face;
  std::map<SegmentMask, double> combo_nonface;
  std::array<double, kNumSegments> seg_face{};
  std::array<double, kNumSegments> seg_nonface{};
  std::size_t n_face = 0;
  std::size_t n_nonface = 0;

  double face_combo(SegmentMask m) const {
    auto it = combo_face.find(m);
    return it == combo_face.end() ? 0.0 : it->second;
  }
  double nonface_combo(SegmentMask m) const {
    auto it = combo_nonface.find(m);
    return it == combo_nonface.end() ? 0.0 : it->second;
  }

  friend bool operator==(const PriorTable&, const PriorTable&) = default;
};

using PriorFeatures = std::array<double, kPriorDim>;

inline PriorTable build_priors(const std::vector<LabeledProposal>& train) {
  std::map<SegmentMask, std::size_t> cf, cn;
  std::array<std::size_t, kNumSegments> sf{}, sn{};
  PriorTable t;
  for (const auto& lp : train) {
    const SegmentMask m = lp.proposal.mask();
    const bool face = lp.label == Label::Face;
    ++(face ? cf : cn)[m];
    ++(face ? t.n_face : t.n_nonface);
    for (int k = 0; k < kNumSegments; ++k)
      if (m & (1u << k)) ++(face ? sf : sn)[static_cast<std::size_t>(k)];
  }
  if (t.n_face == 0 || t.n_nonface == 0)
    fail(ErrorKind::DegenerateTrainingSet, "priors need at least one face and one non-face proposal");
  const double nf = static_cast<double>(t.n_face), nn = static_cast<double>(t.n_nonface);
  for (const auto& [m, c] : cf) t.combo_face[m] = static_cast<double>(c) / nf;
  for (const auto& [m, c] : cn) t.combo_nonface[m] = static_cast<double>(c) / nn;
  for (std::size_t k = 0; k < static_cast<std::size_t>(kNumSegments); ++k) {
    t.seg_face[k] = static_cast<double>(sf[k]) / nf;
    t.seg_nonface[k] = static_cast<double>(sn[k]) / nn;
  }
  return t;
}

/// [combo_face, combo_nonface, seg_face[0..8], seg_nonface[0..8]], with
/// per-segment entries zeroed for segments absent from the proposal.
inline PriorFeatures prior_features(SegmentMask mask, const PriorTable& table) {
  PriorFeatures f{};
  f[0] = table.face_combo(mask);
  f[1] = table.nonface_combo(mask);
  for (int k = 0; k < kNumSegments; ++k) {
    if (!(mask & (1u << k))) continue;
    f[static_cast<std::size_t>(2 + k)] = table.seg_face[static_cast<std::size_t>(k)];
    f[static_cast<std::size_t>(2 + kNumSegments + k)] = table.seg_nonface[static_cast<std::size_t>(k)];
  }
  return f;
}

inline PriorFeatures prior_features(const Proposal& p, const PriorTable& table) { return prior_features(p.mask(), table); }

/// Mean of the prior features; multiplies the network's face probability.
inline double rerank_multiplier(const Proposal& p, const PriorTable& table) {
  const auto f = prior_features(p, table);
  return std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(kPriorDim);
}

inline void write_priors(std::ostream& out, const PriorTable& t) {
  out << "n_face=" << t.n_face << '\n' << "n_nonface=" << t.n_nonface << '\n';
  auto combos = [&](const char* key, const std::map<SegmentMask, double>& m) {
    out << key << '=';
    bool first = true;
    for (const auto& [mask, v] : m) {
      if (!first) out << ';';
      first = false;
      out << mask << ':' << text::fmt(v);
    }
    out << '\n';
  };
  combos("combo_face", t.combo_face);
  combos("combo_nonface", t.combo_nonface);
  out << "seg_face=" << text::join(std::vector<double>(t.seg_face.begin(), t.seg_face.end()), ',') << '\n';
  out << "seg_nonface=" << text::join(std::vector<double>(t.seg_nonface.begin(), t.seg_nonface.end()), ',') << '\n';
}

// Applies one key=value line of a [priors] section; returns false for unknown keys.
inline bool read_prior_field(PriorTable& t, std::string_view key, std::string_view val, const std::string& where) {
  auto combos = [&](std::map<SegmentMask, double>& m) {
    m.clear();
    if (text::trim(val).empty()) return;
    for (auto item : text::split(val, ';')) {
      const auto c = item.find(':');
      if (c == std::string_view::npos) fail(ErrorKind::ParseError, where + ": combo entry needs mask:value");
      m[text::parse<SegmentMask>(item.substr(0, c), where)] = text::parse<double>(item.substr(c + 1), where);
    }
  };
  auto segs = [&](std::array<double, kNumSegments>& a) {
    const auto v = text::parse_list<double>(val, ',', where);
    if (v.size() != static_cast<std::size_t>(kNumSegments)) fail(ErrorKind::ParseError, where + ": expected 9 values");
    std::copy(v.begin(), v.end(), a.begin());
  };
  if (key == "n_face") t.n_face = text::parse<std::size_t>(val, where);
  else if (key == "n_nonface") t.n_nonface = text::parse<std::size_t>(val, where);
  else if (key == "combo_face") combos(t.combo_face);
  else if (key == "combo_nonface") combos(t.combo_nonface);
  else if (key == "seg_face") segs(t.seg_face);
  else if (key == "seg_nonface") segs(t.seg_nonface);
  else return false;
  return true;
}

}  // namespace fseg
