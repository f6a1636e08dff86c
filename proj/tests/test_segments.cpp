#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fseg/random.hpp"
#include "fseg/segments.hpp"

using namespace fseg;

TEST(SegmentKind, IndexingIsBijective) {
  std::set<int> seen;
  SegmentMask all = 0;
  for (SegmentKind k : kAllKinds) {
    seen.insert(index_of(k));
    all |= bit_of(k);
    EXPECT_EQ(parse_kind(name_of(k)), k);
  }
  EXPECT_EQ(seen.size(), 9u);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 8);
  EXPECT_EQ(all, 0b111111111);
  EXPECT_EQ(kAllSegments, 0b111111111);
  EXPECT_FALSE(try_parse_kind("Chin"));
  try {
    parse_kind("Chin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownSegmentKind);
  }
}

TEST(DefaultLayout, FullScaleMatchesPublishedInputs) {
  const auto full = default_layout(Scale::Full);
  const std::pair<SegmentKind, std::pair<int, int>> table[] = {
      {SegmentKind::Nose, {69, 81}},    {SegmentKind::Eye, {54, 162}},   {SegmentKind::UL34, {147, 147}},
      {SegmentKind::UR34, {147, 147}},  {SegmentKind::U12, {99, 192}},   {SegmentKind::L34, {192, 147}},
      {SegmentKind::UL12, {99, 99}},    {SegmentKind::R12, {192, 99}},   {SegmentKind::L12, {192, 99}},
  };
  for (const auto& [k, hw] : table) {
    EXPECT_EQ(full[k].canon_h, hw.first) << name_of(k);
    EXPECT_EQ(full[k].canon_w, hw.second) << name_of(k);
  }
}

TEST(DefaultLayout, ToyScaleDividesByThreeAndSnapsToFour) {
  const auto full = default_layout(Scale::Full);
  const auto toy = default_layout(Scale::Toy);
  EXPECT_EQ(toy[SegmentKind::UL12].canon_h, 32);
  EXPECT_EQ(toy[SegmentKind::UL12].canon_w, 32);
  for (SegmentKind k : kAllKinds) {
    for (auto [t, f] : {std::pair{toy[k].canon_h, full[k].canon_h}, std::pair{toy[k].canon_w, full[k].canon_w}}) {
      EXPECT_EQ(t % 4, 0);
      EXPECT_LE(std::abs(t - f / 3.0), 2.0) << name_of(k);
    }
  }
}

TEST(DefaultLayout, RegionsValid) {
  for (Scale s : {Scale::Full, Scale::Toy}) {
    const auto layout = default_layout(s);
    EXPECT_NO_THROW(validate(layout));
    for (SegmentKind k : kAllKinds) {
      const auto& r = layout[k];
      EXPECT_LE(0.0, r.u0);
      EXPECT_LT(r.u0, r.u1);
      EXPECT_LE(r.u1, 1.0);
      EXPECT_LE(0.0, r.v0);
      EXPECT_LT(r.v0, r.v1);
      EXPECT_LE(r.v1, 1.0);
    }
  }
  auto bad = default_layout(Scale::Toy);
  bad.specs[0].u1 = bad.specs[0].u0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(ImpliedFace, HandExamples) {
  const auto layout = default_layout(Scale::Full);
  const SegmentDetection l12{SegmentKind::L12, BoxI{10, 0, 50, 100}, 1.0};
  EXPECT_EQ(implied_face_box(l12, layout), (BoxI{10, 0, 100, 100}));
  const auto [cx, cy] = implied_face_center(l12, layout);
  EXPECT_DOUBLE_EQ(cx, 60.0);
  EXPECT_DOUBLE_EQ(cy, 50.0);
  const SegmentDetection r12{SegmentKind::R12, BoxI{60, 0, 50, 100}, 1.0};
  EXPECT_EQ(implied_face_box(r12, layout), (BoxI{10, 0, 100, 100}));
}

TEST(ImpliedFace, IdentityRegion) {
  auto layout = default_layout(Scale::Toy);
  auto& s = layout.specs[static_cast<std::size_t>(index_of(SegmentKind::Nose))];
  s.u0 = s.v0 = 0.0;
  s.u1 = s.v1 = 1.0;
  const SegmentDetection d{SegmentKind::Nose, BoxI{7, 9, 31, 17}, 0.0};
  EXPECT_EQ(implied_face_box(d, layout), d.box);
}

TEST(ImpliedFace, U12CentreKeepsX) {
  const auto layout = default_layout(Scale::Toy);
  const SegmentDetection d{SegmentKind::U12, BoxI{20, 30, 40, 20}, 0.0};
  EXPECT_DOUBLE_EQ(implied_face_center(d, layout).first, 40.0);
}

TEST(ImpliedFace, SegmentsOfOneFaceAgreeOnCentre) {
  const auto layout = default_layout(Scale::Toy);
  const BoxI face{33, 21, 87, 87};
  for (SegmentKind a : kAllKinds)
    for (SegmentKind b : kAllKinds) {
      const auto ca = implied_face_center({a, segment_box(face, a, layout), 0}, layout);
      const auto cb = implied_face_center({b, segment_box(face, b, layout), 0}, layout);
      EXPECT_LE(std::hypot(ca.first - cb.first, ca.second - cb.second), 2.0) << name_of(a) << " " << name_of(b);
    }
}

// With face sides divisible by 40 every region edge lands on an integer, so
// the forward and inverse maps are exact.
TEST(ImpliedFace, RoundTripOnGridAlignedFaces) {
  const auto layout = default_layout(Scale::Toy);
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    const BoxI face{rng.range(-50, 200), rng.range(-50, 200), 40 * rng.range(1, 8), 40 * rng.range(1, 8)};
    for (SegmentKind k : kAllKinds) {
      const auto back = implied_face_box({k, segment_box(face, k, layout), 0}, layout);
      EXPECT_LE(std::abs(back.x - face.x), 1);
      EXPECT_LE(std::abs(back.y - face.y), 1);
      EXPECT_LE(std::abs(back.right() - face.right()), 1);
      EXPECT_LE(std::abs(back.bottom() - face.bottom()), 1);
    }
  }
}

// For arbitrary sizes the pixel rounding of the segment box is magnified by
// the inverse region fraction.
TEST(ImpliedFace, RoundTripErrorBoundedByRegionFraction) {
  const auto layout = default_layout(Scale::Toy);
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    const BoxI face{rng.range(-50, 200), rng.range(-50, 200), rng.range(20, 200), rng.range(20, 200)};
    for (SegmentKind k : kAllKinds) {
      const auto& s = layout[k];
      const double tol_x = 1.0 / (s.u1 - s.u0) + 1.0, tol_y = 1.0 / (s.v1 - s.v0) + 1.0;
      const auto back = implied_face_box({k, segment_box(face, k, layout), 0}, layout);
      EXPECT_LE(std::abs(back.x - face.x), tol_x);
      EXPECT_LE(std::abs(back.right() - face.right()), tol_x);
      EXPECT_LE(std::abs(back.y - face.y), tol_y);
      EXPECT_LE(std::abs(back.bottom() - face.bottom()), tol_y);
    }
  }
}

TEST(Scale, ParseAndPrint) {
  EXPECT_EQ(parse_scale("full"), Scale::Full);
  EXPECT_EQ(parse_scale("toy"), Scale::Toy);
  EXPECT_EQ(to_string(Scale::Toy), "toy");
  EXPECT_THROW(parse_scale("huge"), Error);
}
