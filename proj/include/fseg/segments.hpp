#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"

namespace fseg {

/// The nine facial segments. The enumerator value is the stable index used in
/// bitmasks, feature layouts and serialized models.
enum class SegmentKind : std::uint8_t { Nose = 0, Eye, UL34, UR34, U12, L34, UL12, R12, L12 };

inline constexpr int kNumSegments = 9;
using SegmentMask = std::uint16_t;
inline constexpr SegmentMask kAllSegments = (1u << kNumSegments) - 1;

inline constexpr std::array<SegmentKind, kNumSegments> kAllKinds = {
    SegmentKind::Nose, SegmentKind::Eye,  SegmentKind::UL34, SegmentKind::UR34, SegmentKind::U12,
    SegmentKind::L34,  SegmentKind::UL12, SegmentKind::R12,  SegmentKind::L12};

inline constexpr std::array<std::string_view, kNumSegments> kKindNames = {"Nose", "Eye",  "UL34", "UR34", "U12",
                                                                         "L34",  "UL12", "R12",  "L12"};

constexpr int index_of(SegmentKind k) { return static_cast<int>(k); }
constexpr SegmentMask bit_of(SegmentKind k) { return static_cast<SegmentMask>(1u << index_of(k)); }
constexpr std::string_view name_of(SegmentKind k) { return kKindNames[static_cast<std::size_t>(index_of(k))]; }

inline std::optional<SegmentKind> try_parse_kind(std::string_view s) {
  for (int i = 0; i < kNumSegments; ++i)
    if (kKindNames[static_cast<std::size_t>(i)] == s) return static_cast<SegmentKind>(i);
  return std::nullopt;
}

inline SegmentKind parse_kind(std::string_view s) {
  if (auto k = try_parse_kind(s)) return *k;
  fail(ErrorKind::UnknownSegmentKind, "unknown segment kind '" + std::string(s) + "'");
}

inline int popcount(SegmentMask m) { return __builtin_popcount(m); }

/// A segment's sub-rectangle of the unit face box plus the canonical input
/// size (height x width) its patches are resampled to.
struct SegmentSpec {
  double u0 = 0, v0 = 0, u1 = 1, v1 = 1;
  int canon_h = 1;
  int canon_w = 1;

  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

enum class Scale { Full, Toy };

inline std::string_view to_string(Scale s) { return s == Scale::Full ? "full" : "toy"; }

inline Scale parse_scale(std::string_view s) {
  if (s == "full") return Scale::Full;
  if (s == "toy") return Scale::Toy;
  fail(ErrorKind::ConfigError, "scale must be 'full' or 'toy', got '" + std::string(s) + "'");
}

struct SegmentLayout {
  std::array<SegmentSpec, kNumSegments> specs{};

  const SegmentSpec& operator[](SegmentKind k) const { return specs[static_cast<std::size_t>(index_of(k))]; }
  SegmentSpec& operator[](SegmentKind k) { return specs[static_cast<std::size_t>(index_of(k))]; }

  friend bool operator==(const SegmentLayout&, const SegmentLayout&) = default;
};

inline void validate(const SegmentLayout& layout) {
  for (SegmentKind k : kAllKinds) {
    const auto& s = layout[k];
    if (!(0.0 <= s.u0 && s.u0 < s.u1 && s.u1 <= 1.0 && 0.0 <= s.v0 && s.v0 < s.v1 && s.v1 <= 1.0))
      fail(ErrorKind::ConfigError, "segments.layout." + std::string(name_of(k)) + ": region must satisfy 0<=u0<u1<=1, 0<=v0<v1<=1");
    if (s.canon_h < 1 || s.canon_w < 1)
      fail(ErrorKind::ConfigError, "segments.layout." + std::string(name_of(k)) + ": canonical dims must be positive");
  }
}

namespace detail {
// Canonical input sizes (h, w) of the full-scale network, per kind index.
inline constexpr std::array<std::pair<int, int>, kNumSegments> kFullDims = {
    std::pair{69, 81},   std::pair{54, 162}, std::pair{147, 147}, std::pair{147, 147}, std::pair{99, 192},
    std::pair{192, 147}, std::pair{99, 99},  std::pair{192, 99},  std::pair{192, 99}};

// Unit-face regions (u0, v0, u1, v1), per kind index.
inline constexpr std::array<std::array<double, 4>, kNumSegments> kRegions = {{
    {0.3, 0.35, 0.7, 0.75},     // Nose
    {0.125, 0.2, 0.875, 0.45},  // Eye
    {0.0, 0.0, 0.75, 0.75},     // UL34
    {0.25, 0.0, 1.0, 0.75},     // UR34
    {0.0, 0.0, 1.0, 0.5},       // U12
    {0.0, 0.0, 0.75, 1.0},      // L34
    {0.0, 0.0, 0.5, 0.5},       // UL12
    {0.5, 0.0, 1.0, 1.0},       // R12
    {0.0, 0.0, 0.5, 1.0},       // L12
}};

// Divide by three and snap to the nearest multiple of four (ties round up).
inline int toy_dim(int full) { return 4 * static_cast<int>(std::lround(full / 3.0 / 4.0)); }
}  // namespace detail

inline SegmentLayout default_layout(Scale scale) {
  SegmentLayout layout;
  for (int i = 0; i < kNumSegments; ++i) {
    auto& s = layout.specs[static_cast<std::size_t>(i)];
    const auto& r = detail::kRegions[static_cast<std::size_t>(i)];
    s.u0 = r[0];
    s.v0 = r[1];
    s.u1 = r[2];
    s.v1 = r[3];
    const auto [h, w] = detail::kFullDims[static_cast<std::size_t>(i)];
    s.canon_h = scale == Scale::Full ? h : detail::toy_dim(h);
    s.canon_w = scale == Scale::Full ? w : detail::toy_dim(w);
  }
  return layout;
}

/// One hit from a weak segment detector.
struct SegmentDetection {
  SegmentKind kind = SegmentKind::Nose;
  BoxI box;
  double score = 0.0;

  friend bool operator==(const SegmentDetection&, const SegmentDetection&) = default;
};

struct FaceGeometry {
  double x, y, w, h;
};

inline FaceGeometry implied_face_geometry(const SegmentDetection& det, const SegmentLayout& layout) {
  const auto& s = layout[det.kind];
  const double fw = det.box.w / (s.u1 - s.u0);
  const double fh = det.box.h / (s.v1 - s.v0);
  return FaceGeometry{det.box.x - s.u0 * fw, det.box.y - s.v0 * fh, fw, fh};
}

/// The face box whose unit region for det.kind reproduces det.box.
inline BoxI implied_face_box(const SegmentDetection& det, const SegmentLayout& layout) {
  const auto g = implied_face_geometry(det, layout);
  const int x0 = static_cast<int>(std::lround(g.x));
  const int y0 = static_cast<int>(std::lround(g.y));
  return BoxI{x0, y0, static_cast<int>(std::lround(g.w)), static_cast<int>(std::lround(g.h))};
}

inline std::pair<double, double> implied_face_center(const SegmentDetection& det, const SegmentLayout& layout) {
  const auto g = implied_face_geometry(det, layout);
  return {g.x + 0.5 * g.w, g.y + 0.5 * g.h};
}

/// Forward mapping: the box a segment occupies inside a given face box.
inline BoxI segment_box(const BoxI& face, SegmentKind kind, const SegmentLayout& layout) {
  const auto& s = layout[kind];
  const int x0 = static_cast<int>(std::lround(face.x + s.u0 * face.w));
  const int x1 = static_cast<int>(std::lround(face.x + s.u1 * face.w));
  const int y0 = static_cast<int>(std::lround(face.y + s.v0 * face.h));
  const int y1 = static_cast<int>(std::lround(face.y + s.v1 * face.h));
  return BoxI{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace fseg
