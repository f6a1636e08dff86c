#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/random.hpp"
#include "fseg/segments.hpp"
#include "fseg/text.hpp"

namespace fseg {

/// Co-located segment detections: at most one per kind.
struct Cluster {
  std::vector<SegmentDetection> members;
  double cx = 0.0;
  double cy = 0.0;
  BoxI box;

  SegmentMask mask() const {
    SegmentMask m = 0;
    for (const auto& d : members) m |= bit_of(d.kind);
    return m;
  }
  double total_score() const {
    double s = 0.0;
    for (const auto& d : members) s += d.score;
    return s;
  }
};

enum class BoxMode { Union, ImpliedFace };

inline std::string_view to_string(BoxMode m) { return m == BoxMode::Union ? "union" : "implied"; }

inline BoxMode parse_box_mode(std::string_view s) {
  if (s == "union") return BoxMode::Union;
  if (s == "implied") return BoxMode::ImpliedFace;
  fail(ErrorKind::ConfigError, "proposals.box_mode must be 'union' or 'implied', got '" + std::string(s) + "'");
}

/// A subset of one cluster's segments and the box encapsulating them.
struct Proposal {
  std::array<std::optional<SegmentDetection>, kNumSegments> segments{};
  BoxI box;
  int cluster_id = 0;
  std::string source_image;

  SegmentMask mask() const {
    SegmentMask m = 0;
    for (int i = 0; i < kNumSegments; ++i)
      if (segments[static_cast<std::size_t>(i)]) m |= static_cast<SegmentMask>(1u << i);
    return m;
  }
  int size() const { return popcount(mask()); }
  bool has(SegmentKind k) const { return segments[static_cast<std::size_t>(index_of(k))].has_value(); }
  const SegmentDetection& at(SegmentKind k) const { return *segments[static_cast<std::size_t>(index_of(k))]; }

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

enum class Label { NonFace = 0, Face = 1 };

struct LabeledProposal {
  Proposal proposal;
  Label label = Label::NonFace;
  double overlap = 0.0;
};

inline BoxI union_box(const std::vector<SegmentDetection>& dets) {
  BoxI b = dets.front().box;
  for (std::size_t i = 1; i < dets.size(); ++i) b = enclose(b, dets[i].box);
  return b;
}

inline BoxI mean_implied_box(const std::vector<SegmentDetection>& dets, const SegmentLayout& layout) {
  double x = 0, y = 0, w = 0, h = 0;
  for (const auto& d : dets) {
    const auto g = implied_face_geometry(d, layout);
    x += g.x;
    y += g.y;
    w += g.w;
    h += g.h;
  }
  const double n = static_cast<double>(dets.size());
  return BoxI{static_cast<int>(std::lround(x / n)), static_cast<int>(std::lround(y / n)),
              static_cast<int>(std::lround(w / n)), static_cast<int>(std::lround(h / n))};
}

/// Greedy clustering by implied face centre. Detections are visited by
/// descending score; each joins the first cluster whose running mean centre is
/// within radius_frac times the diagonal of its implied face box.
inline std::vector<Cluster> cluster_detections(std::vector<SegmentDetection> dets, const SegmentLayout& layout,
                                               double radius_frac = 0.25) {
  if (!(radius_frac > 0.0)) fail(ErrorKind::ConfigError, "proposals.radius_frac must be > 0");
  std::stable_sort(dets.begin(), dets.end(),
                   [](const SegmentDetection& a, const SegmentDetection& b) { return a.score > b.score; });

  struct Acc {
    std::vector<SegmentDetection> all;
    double sx = 0, sy = 0;
  };
  std::vector<Acc> acc;
  for (const auto& d : dets) {
    const auto [cx, cy] = implied_face_center(d, layout);
    const auto g = implied_face_geometry(d, layout);
    const double radius = radius_frac * std::hypot(g.w, g.h);
    bool placed = false;
    for (auto& a : acc) {
      const double n = static_cast<double>(a.all.size());
      if (std::hypot(a.sx / n - cx, a.sy / n - cy) <= radius) {
        a.all.push_back(d);
        a.sx += cx;
        a.sy += cy;
        placed = true;
        break;
      }
    }
    if (!placed) acc.push_back(Acc{{d}, cx, cy});
  }

  std::vector<Cluster> out;
  out.reserve(acc.size());
  for (const auto& a : acc) {
    Cluster c;
    std::array<bool, kNumSegments> seen{};
    for (const auto& d : a.all) {  // already in descending score order
      auto& s = seen[static_cast<std::size_t>(index_of(d.kind))];
      if (s) continue;
      s = true;
      c.members.push_back(d);
    }
    double sx = 0, sy = 0;
    for (const auto& d : c.members) {
      const auto [x, y] = implied_face_center(d, layout);
      sx += x;
      sy += y;
    }
    c.cx = sx / static_cast<double>(c.members.size());
    c.cy = sy / static_cast<double>(c.members.size());
    c.box = union_box(c.members);
    out.push_back(std::move(c));
  }
  return out;
}

/// Collapses clusters with identical kind sets and identical boxes, keeping
/// the highest total score at the position of the first occurrence.
inline std::vector<Cluster> dedupe_clusters(const std::vector<Cluster>& clusters) {
  std::vector<Cluster> out;
  for (const auto& c : clusters) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Cluster& o) { return o.mask() == c.mask() && o.box == c.box; });
    if (it == out.end()) out.push_back(c);
    else if (c.total_score() > it->total_score()) *it = c;
  }
  return out;
}

/// Σ_{k=kmin}^{n} C(n, k).
inline std::uint64_t count_subsets(int n, int kmin) {
  if (n < 0 || kmin < 0 || kmin > n) return 0;
  std::uint64_t total = 0, c = 1;  // c = C(n, k)
  for (int k = 0; k <= n; ++k) {
    if (k >= kmin) total += c;
    c = c * static_cast<std::uint64_t>(n - k) / static_cast<std::uint64_t>(k + 1);
  }
  return total;
}

struct ProposalParams {
  int zeta = 10;
  int min_segments = 3;
  BoxMode box_mode = BoxMode::Union;
};

inline Proposal make_proposal(const std::vector<SegmentDetection>& members, int cluster_id, const std::string& image,
                              BoxMode mode, const SegmentLayout& layout) {
  Proposal p;
  for (const auto& d : members) p.segments[static_cast<std::size_t>(index_of(d.kind))] = d;
  p.box = mode == BoxMode::Union ? union_box(members) : mean_implied_box(members, layout);
  p.cluster_id = cluster_id;
  p.source_image = image;
  return p;
}

/// Up to zeta proposals per cluster: the full member set first, then distinct
/// member subsets of size >= min_segments drawn uniformly without replacement.
/// Proposals repeating an earlier (kind set, box) pair are dropped.
inline std::vector<Proposal> generate_proposals(const std::vector<Cluster>& clusters, const ProposalParams& params,
                                                std::uint64_t seed, const std::string& image_id = {},
                                                const SegmentLayout& layout = default_layout(Scale::Toy)) {
  if (params.zeta < 1) fail(ErrorKind::ConfigError, "proposals.zeta must be >= 1");
  if (params.min_segments < 1) fail(ErrorKind::ConfigError, "proposals.min_segments must be >= 1");
  Rng rng(hash_seed(seed, image_id));
  std::vector<Proposal> out;
  std::set<std::pair<SegmentMask, BoxI>> seen;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& members = clusters[ci].members;
    const int n = static_cast<int>(members.size());
    if (n < params.min_segments) continue;
    const std::uint32_t full = (1u << n) - 1;
    std::vector<std::uint32_t> picks{full};
    std::vector<std::uint32_t> others;
    for (std::uint32_t s = 1; s < full; ++s)
      if (__builtin_popcount(s) >= params.min_segments) others.push_back(s);
    rng.shuffle(others);
    for (std::size_t i = 0; i < others.size() && static_cast<int>(picks.size()) < params.zeta; ++i)
      picks.push_back(others[i]);
    for (std::uint32_t s : picks) {
      std::vector<SegmentDetection> subset;
      for (int i = 0; i < n; ++i)
        if (s & (1u << i)) subset.push_back(members[static_cast<std::size_t>(i)]);
      auto p = make_proposal(subset, static_cast<int>(ci), image_id, params.box_mode, layout);
      if (seen.insert({p.mask(), p.box}).second) out.push_back(std::move(p));
    }
  }
  return out;
}

/// Face iff the image has a truth box overlapping by IoU >= iou_min.
inline std::vector<LabeledProposal> label_proposals(const std::vector<Proposal>& proposals,
                                                    const std::optional<BoxI>& truth, double iou_min = 0.5) {
  std::vector<LabeledProposal> out;
  out.reserve(proposals.size());
  for (const auto& p : proposals) {
    LabeledProposal lp{p, Label::NonFace, 0.0};
    if (truth) {
      lp.overlap = iou(p.box, *truth);
      if (lp.overlap >= iou_min) lp.label = Label::Face;
    }
    out.push_back(std::move(lp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Proposal interchange: image_id,cluster_id,x,y,w,h,members
// where members is a ';'-separated list of "kind x y w h score".

using ProposalsByImage = std::map<std::string, std::vector<Proposal>>;

inline void write_proposals(std::ostream& out, const ProposalsByImage& props) {
  out << "# image_id,cluster_id,x,y,w,h,members(kind x y w h score;...)\n";
  for (const auto& [id, list] : props) {
    for (const auto& p : list) {
      out << id << ',' << p.cluster_id << ',' << p.box.x << ',' << p.box.y << ',' << p.box.w << ',' << p.box.h << ',';
      bool first = true;
      for (const auto& s : p.segments) {
        if (!s) continue;
        if (!first) out << ';';
        first = false;
        out << name_of(s->kind) << ' ' << s->box.x << ' ' << s->box.y << ' ' << s->box.w << ' ' << s->box.h << ' '
            << text::fmt(s->score);
      }
      out << '\n';
    }
  }
}

inline void export_proposals(const std::string& path, const ProposalsByImage& props) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  write_proposals(out, props);
}

inline ProposalsByImage read_proposals(std::istream& in, const std::string& source) {
  ProposalsByImage out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = text::split(t, ',');
    if (f.size() != 7) fail(ErrorKind::ParseError, where + ": expected 7 fields");
    Proposal p;
    p.source_image = std::string(text::trim(f[0]));
    p.cluster_id = text::parse<int>(f[1], where);
    p.box = BoxI{text::parse<int>(f[2], where), text::parse<int>(f[3], where), text::parse<int>(f[4], where),
                 text::parse<int>(f[5], where)};
    for (auto m : text::split(f[6], ';')) {
      std::istringstream ms{std::string(m)};
      std::string kind, sx, sy, sw, sh, ss;
      if (!(ms >> kind >> sx >> sy >> sw >> sh >> ss)) fail(ErrorKind::ParseError, where + ": malformed member");
      const auto k = try_parse_kind(kind);
      if (!k) fail(ErrorKind::UnknownSegmentKind, where + ": unknown segment kind '" + kind + "'");
      SegmentDetection d{*k,
                         BoxI{text::parse<int>(sx, where), text::parse<int>(sy, where), text::parse<int>(sw, where),
                              text::parse<int>(sh, where)},
                         text::parse<double>(ss, where)};
      if (p.has(*k)) fail(ErrorKind::ParseError, where + ": duplicate segment kind in proposal");
      p.segments[static_cast<std::size_t>(index_of(*k))] = d;
    }
    out[p.source_image].push_back(std::move(p));
  }
  return out;
}

inline ProposalsByImage import_proposals(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, path);
  return read_proposals(in, path);
}

}  // namespace fseg
