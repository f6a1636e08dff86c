#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fseg/priors.hpp"
#include "fseg/random.hpp"

using namespace fseg;

namespace {

LabeledProposal with_mask(SegmentMask m, Label label) {
  LabeledProposal lp;
  for (int k = 0; k < kNumSegments; ++k)
    if (m & (1u << k)) lp.proposal.segments[static_cast<std::size_t>(k)] = SegmentDetection{kAllKinds[static_cast<std::size_t>(k)], {k, 0, 4, 4}, 1.0};
  lp.label = label;
  return lp;
}

// Independent brute-force oracle: counts over the raw training list.
PriorFeatures oracle(SegmentMask m, const std::vector<LabeledProposal>& train) {
  double nf = 0, nn = 0, cf = 0, cn = 0;
  std::array<double, kNumSegments> sf{}, sn{};
  for (const auto& lp : train) {
    const bool face = lp.label == Label::Face;
    (face ? nf : nn) += 1;
    if (lp.proposal.mask() == m) (face ? cf : cn) += 1;
    for (int k = 0; k < kNumSegments; ++k)
      if (lp.proposal.has(kAllKinds[static_cast<std::size_t>(k)])) (face ? sf : sn)[static_cast<std::size_t>(k)] += 1;
  }
  PriorFeatures f{};
  f[0] = cf / nf;
  f[1] = cn / nn;
  for (int k = 0; k < kNumSegments; ++k)
    if (m & (1u << k)) {
      f[static_cast<std::size_t>(2 + k)] = sf[static_cast<std::size_t>(k)] / nf;
      f[static_cast<std::size_t>(11 + k)] = sn[static_cast<std::size_t>(k)] / nn;
    }
  return f;
}

std::vector<LabeledProposal> random_train(Rng& rng, int n) {
  std::vector<LabeledProposal> out;
  for (int i = 0; i < n; ++i) {
    // few distinct masks so combinations repeat
    SegmentMask m = static_cast<SegmentMask>(rng.below(24) * 21 % 512);
    if (m == 0) m = 7;
    out.push_back(with_mask(m, rng.bernoulli(0.6) ? Label::Face : Label::NonFace));
  }
  return out;
}

}  // namespace

constexpr SegmentMask A = 0b001, B = 0b010, C = 0b100;

TEST(BuildPriors, SingleMass) {
  const auto t = build_priors({with_mask(A, Label::Face), with_mask(A, Label::Face), with_mask(B, Label::NonFace)});
  EXPECT_DOUBLE_EQ(t.face_combo(A), 1.0);
  EXPECT_DOUBLE_EQ(t.nonface_combo(B), 1.0);
  EXPECT_DOUBLE_EQ(t.seg_face[0], 1.0);
  EXPECT_EQ(t.n_face, 2u);
  EXPECT_EQ(t.n_nonface, 1u);
}

TEST(BuildPriors, CountAndDivide) {
  const auto t = build_priors({with_mask(A, Label::Face), with_mask(A, Label::Face), with_mask(B, Label::Face),
                               with_mask(C, Label::Face), with_mask(A, Label::NonFace)});
  EXPECT_DOUBLE_EQ(t.face_combo(A), 0.5);
  EXPECT_DOUBLE_EQ(t.face_combo(B), 0.25);
  EXPECT_DOUBLE_EQ(t.face_combo(C), 0.25);
  EXPECT_DOUBLE_EQ(t.face_combo(A | B), 0.0);
}

TEST(BuildPriors, EmptyClassIsDegenerate) {
  try {
    build_priors({with_mask(A, Label::Face)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateTrainingSet);
  }
  EXPECT_THROW(build_priors({}), Error);
}

TEST(PriorFeatures, LengthAndUnseenMask) {
  const auto t = build_priors({with_mask(A | B, Label::Face), with_mask(C, Label::NonFace)});
  const auto f = prior_features(A | C, t);
  EXPECT_EQ(f.size(), 20u);
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_DOUBLE_EQ(f[2 + 0], 1.0);   // seg_face[A]
  EXPECT_DOUBLE_EQ(f[2 + 2], 0.0);   // seg_face[C]
  EXPECT_DOUBLE_EQ(f[11 + 2], 1.0);  // seg_nonface[C]
  EXPECT_EQ(f[2 + 1], 0.0);          // B absent from the proposal
}

TEST(PriorFeatures, HandEnumeratedFiveProposals) {
  // faces: {A,B}, {A,B}, {A}; nonfaces: {B,C}, {A,B}
  const std::vector<LabeledProposal> train = {with_mask(A | B, Label::Face), with_mask(A | B, Label::Face),
                                              with_mask(A, Label::Face), with_mask(B | C, Label::NonFace),
                                              with_mask(A | B, Label::NonFace)};
  const auto t = build_priors(train);
  PriorFeatures expect{};
  expect[0] = 2.0 / 3.0;       // {A,B} among faces
  expect[1] = 1.0 / 2.0;       // {A,B} among nonfaces
  expect[2 + 0] = 3.0 / 3.0;   // A in faces
  expect[2 + 1] = 2.0 / 3.0;   // B in faces
  expect[11 + 0] = 1.0 / 2.0;  // A in nonfaces
  expect[11 + 1] = 2.0 / 2.0;  // B in nonfaces
  const auto f = prior_features(A | B, t);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], expect[i], 1e-15) << i;
  double mean = 0.0;
  for (double v : expect) mean += v;
  mean /= 20.0;
  EXPECT_NEAR(rerank_multiplier(with_mask(A | B, Label::Face).proposal, t), mean, 1e-15);
}

TEST(PriorFeatures, RerankExtremes) {
  const auto t = build_priors({with_mask(A, Label::Face), with_mask(B, Label::NonFace)});
  EXPECT_EQ(rerank_multiplier(with_mask(C, Label::Face).proposal, t), 0.0);
  PriorTable ones;
  ones.combo_face[kAllSegments] = 1.0;
  ones.combo_nonface[kAllSegments] = 1.0;
  ones.seg_face.fill(1.0);
  ones.seg_nonface.fill(1.0);
  EXPECT_DOUBLE_EQ(rerank_multiplier(with_mask(kAllSegments, Label::Face).proposal, ones), 1.0);
}

TEST(PriorInvariants, PartitionConsistencyOracleAndPermutation) {
  Rng rng(31);
  const auto train = random_train(rng, 1000);
  const auto t = build_priors(train);
  double sf = 0, sn = 0;
  for (const auto& [m, v] : t.combo_face) sf += v;
  for (const auto& [m, v] : t.combo_nonface) sn += v;
  EXPECT_NEAR(sf, 1.0, 1e-12);
  EXPECT_NEAR(sn, 1.0, 1e-12);
  for (int k = 0; k < kNumSegments; ++k) {
    double rf = 0, rn = 0;
    for (const auto& [m, v] : t.combo_face)
      if (m & (1u << k)) rf += v;
    for (const auto& [m, v] : t.combo_nonface)
      if (m & (1u << k)) rn += v;
    EXPECT_NEAR(rf, t.seg_face[static_cast<std::size_t>(k)], 1e-12);
    EXPECT_NEAR(rn, t.seg_nonface[static_cast<std::size_t>(k)], 1e-12);
  }
  for (const auto& lp : train) {
    const auto f = prior_features(lp.proposal, t);
    const auto o = oracle(lp.proposal.mask(), train);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], o[i], 1e-12);
    const double r = rerank_multiplier(lp.proposal, t);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
  auto shuffled = train;
  rng.shuffle(shuffled);
  EXPECT_EQ(build_priors(shuffled), t);
}

TEST(PriorIo, RoundTrip) {
  Rng rng(2);
  const auto t = build_priors(random_train(rng, 200));
  std::ostringstream out;
  write_priors(out, t);
  PriorTable back;
  std::istringstream in(out.str());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    ASSERT_NE(eq, std::string::npos);
    EXPECT_TRUE(read_prior_field(back, line.substr(0, eq), line.substr(eq + 1), "mem"));
  }
  EXPECT_EQ(back, t);
  EXPECT_FALSE(read_prior_field(back, "bogus", "1", "mem"));
}
