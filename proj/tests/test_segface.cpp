#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fseg/segface.hpp"
#include "fseg/synth.hpp"
#include "oracle_data.hpp"
#include "test_util.hpp"

using namespace fseg;
using fseg::testing::TempDir;
using fseg::testing::oracle_training_set;
using fseg::testing::proposal_at;

namespace {

const SegmentLayout kLayout = default_layout(Scale::Toy);

GrayImageF textured(int w, int h, Rng& rng) {
  GrayImageF p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      p.at(x, y) = static_cast<float>(0.2 + 0.3 * std::sin(0.3 * x + 0.2 * y) * 0.5 + 0.4 * rng.uniform());
  return p;
}

std::vector<double> hog_of_affine(const GrayImageF& p, float a, float b, const HogParams& hp) {
  auto q = p;
  for (auto& v : q.data) v = a * v + b;
  return hog(q, hp);
}

double accuracy(const LinearModel& m, const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
  int ok = 0;
  for (std::size_t i = 0; i < X.size(); ++i) ok += (m.margin(X[i]) >= 0 ? 1 : -1) == y[i];
  return static_cast<double>(ok) / static_cast<double>(X.size());
}

SegFaceParams small_params() {
  SegFaceParams p;
  p.segment_svm = SvmParams{1e-3, 10, 3};
  p.master_svm = SvmParams{1e-3, 20, 4};
  return p;
}

}  // namespace

TEST(Hog, DescriptorLength) {
  Rng rng(1);
  EXPECT_EQ(hog(textured(64, 64, rng), {}).size(), 1764u);
  EXPECT_EQ(hog_length(64, 64, {}), 1764u);
  for (SegmentKind k : kAllKinds) {
    const auto& s = kLayout[k];
    EXPECT_EQ(hog(textured(s.canon_w, s.canon_h, rng), {}).size(), hog_length(s.canon_w, s.canon_h, {}));
  }
}

TEST(Hog, ConstantPatchIsZero) {
  for (double v : hog(GrayImageF(32, 24, 0.6f), {})) EXPECT_EQ(v, 0.0);
}

TEST(Hog, BrightnessInvariance) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto p = textured(40, 32, rng);
    const auto a = hog(p, {});
    const auto b = hog_of_affine(p, 2.0f, 0.0f, {});
    const auto c = hog_of_affine(p, 0.7f, 0.15f, {});
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-6);
      EXPECT_NEAR(a[i], c[i], 1e-5);
    }
  }
}

TEST(Hog, BlocksAreL2HysNormalised) {
  Rng rng(3);
  const auto d = hog(textured(32, 32, rng), {});
  const std::size_t blk = 4 * 9;
  for (std::size_t s = 0; s < d.size(); s += blk) {
    double ss = 0.0;
    for (std::size_t i = s; i < s + blk; ++i) {
      ss += d[i] * d[i];
      EXPECT_GE(d[i], 0.0);
    }
    EXPECT_NEAR(ss, 1.0, 1e-6);
  }
}

TEST(Hog, Errors) {
  try {
    hog(GrayImageF(15, 40), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PatchTooSmall);
  }
  HogParams bad;
  bad.clip = 0.0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Svm, SeparableBlobs) {
  Rng rng(4);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    const int label = i % 2 ? 1 : -1;
    X.push_back({2.0 * label + 0.5 * rng.normal(), 0.5 * rng.normal()});
    y.push_back(label);
  }
  const auto m = train_linear_svm(X, y, SvmParams{1e-2, 20, 1});
  EXPECT_EQ(accuracy(m, X, y), 1.0);
  EXPECT_GT(m.margin({2.0, 0.0}), 0.0);
  EXPECT_LT(m.margin({-2.0, 0.0}), 0.0);
}

TEST(Svm, XorIsNotLinearlySeparable) {
  const std::vector<std::vector<double>> X = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y = {1, 1, -1, -1};
  const auto m = train_linear_svm(X, y, SvmParams{1e-2, 50, 1});
  EXPECT_LE(accuracy(m, X, y), 0.75);
}

TEST(Svm, Errors) {
  auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvariantViolation;
  };
  const std::vector<std::vector<double>> X = {{0.0}, {1.0}};
  EXPECT_EQ(kind([&] { train_linear_svm(X, {1, 1}, {}); }), ErrorKind::DegenerateLabels);
  EXPECT_EQ(kind([&] { train_linear_svm(X, {1, 0}, {}); }), ErrorKind::DegenerateLabels);
  EXPECT_EQ(kind([&] { train_linear_svm({{0.0}}, {1}, {}); }), ErrorKind::DegenerateLabels);
  EXPECT_EQ(kind([&] { train_linear_svm({{0.0}, {1.0, 2.0}}, {1, -1}, {}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind([&] { train_linear_svm(X, {1}, {}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind([&] { LinearModel::zero(3).margin({1.0}); }), ErrorKind::DimensionMismatch);
}

TEST(Svm, ObjectiveDoesNotIncreaseAndIsDeterministic) {
  Rng rng(5);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    const int label = rng.bernoulli(0.5) ? 1 : -1;
    X.push_back({label * 0.5 + rng.normal(), rng.normal(), rng.normal()});
    y.push_back(label);
  }
  std::vector<double> trace;
  const SvmParams params{1e-2, 15, 9};
  const auto m = train_linear_svm(X, y, params, &trace);
  ASSERT_EQ(trace.size(), 16u);  // zero model, then one entry per epoch
  const double initial = svm_objective(LinearModel::zero(3), X, y, params.lambda);
  EXPECT_EQ(trace.front(), initial);
  const double final_obj = svm_objective(m, X, y, params.lambda);
  EXPECT_LE(final_obj, initial);
  EXPECT_LE(final_obj, *std::min_element(trace.begin(), trace.end()) + 1e-12);
  EXPECT_EQ(train_linear_svm(X, y, params), m);
}

TEST(FeatureVector, LayoutAndSparsity) {
  SegFaceModel model;
  model.layout = kLayout;
  Rng rng(6);
  for (SegmentKind k : kAllKinds) {
    const auto& s = kLayout[k];
    auto& lm = model.per_segment[static_cast<std::size_t>(index_of(k))];
    lm = LinearModel::zero(hog_length(s.canon_w, s.canon_h, model.hog));
    for (auto& w : lm.weights) w = rng.normal();
    lm.bias = rng.normal();
  }
  LabeledProposal f1{proposal_at({10, 10, 60, 60}, {SegmentKind::Eye, SegmentKind::L12}, "a"), Label::Face, 1.0};
  LabeledProposal n1{proposal_at({80, 40, 60, 60}, {SegmentKind::Nose, SegmentKind::U12}, "a"), Label::NonFace, 0.0};
  model.priors = build_priors({f1, n1});

  const auto img = textured(160, 120, rng);
  const auto& p = f1.proposal;
  const auto F = build_feature_vector(p, model, img);
  ASSERT_EQ(F.size(), static_cast<std::size_t>(kSegFaceDim));
  EXPECT_EQ(kSegFaceDim, 29);
  for (SegmentKind k : kAllKinds) {
    const auto i = static_cast<std::size_t>(index_of(k));
    if (!p.has(k)) {
      EXPECT_EQ(F[i], 0.0) << name_of(k);
      continue;
    }
    // Oracle margin: crop, resize, HoG and dot product computed here.
    const auto& s = kLayout[k];
    const auto patch = resize_bilinear(crop(img, p.at(k).box), s.canon_w, s.canon_h);
    const auto h = hog(patch, model.hog);
    double m = model.per_segment[i].bias;
    for (std::size_t j = 0; j < h.size(); ++j) m += h[j] * model.per_segment[i].weights[j];
    EXPECT_NEAR(F[i], m, 1e-6);
  }
  const auto prior = prior_features(p, model.priors);
  for (std::size_t j = 0; j < prior.size(); ++j) EXPECT_EQ(F[9 + j], prior[j]);
}

TEST(TrainSegFace, SyntheticSetSeparatesAndIsDeterministic) {
  const auto train = oracle_training_set(200, 12);
  const auto model = train_segface(train, small_params());
  EXPECT_EQ(model.master.dim(), 29u);
  std::vector<std::vector<double>> F;
  std::vector<int> Y;
  double face_sum = 0, non_sum = 0;
  int nf = 0, nn = 0;
  for (const auto& ti : train)
    for (const auto& lp : ti.proposals) {
      F.push_back(build_feature_vector(lp.proposal, model, ti.image));
      Y.push_back(lp.label == Label::Face ? 1 : -1);
      const double s = score_proposal_segface(lp.proposal, model, ti.image);
      EXPECT_DOUBLE_EQ(s, model.master.margin(F.back()));
      (lp.label == Label::Face ? face_sum : non_sum) += s;
      ++(lp.label == Label::Face ? nf : nn);
    }
  EXPECT_GE(accuracy(model.master, F, Y), 0.9);
  EXPECT_GT(face_sum / nf, non_sum / nn);

  // F_C sparsity equals the proposal bitmask.
  for (const auto& lp : train[1].proposals) {
    const auto f = build_feature_vector(lp.proposal, model, train[1].image);
    for (SegmentKind k : kAllKinds)
      if (!lp.proposal.has(k)) { EXPECT_EQ(f[static_cast<std::size_t>(index_of(k))], 0.0); }
  }

  // Kinds never used in any training proposal fall back to the zero model.
  const auto& ur = model.per_segment[static_cast<std::size_t>(index_of(SegmentKind::UR34))];
  EXPECT_TRUE(std::all_of(ur.weights.begin(), ur.weights.end(), [](double w) { return w == 0.0; }));
  EXPECT_EQ(ur.bias, 0.0);

  TempDir dir("sf");
  save_segface(dir.file("a"), model);
  save_segface(dir.file("b"), train_segface(train, small_params()));
  EXPECT_EQ(fseg::testing::read_bytes(dir.file("a")), fseg::testing::read_bytes(dir.file("b")));

  const auto back = load_segface(dir.file("a"));
  EXPECT_EQ(back.master, model.master);
  EXPECT_EQ(back.priors, model.priors);
  EXPECT_EQ(back.hog, model.hog);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(back.per_segment[k], model.per_segment[k]);
  save_segface(dir.file("c"), back);
  EXPECT_EQ(fseg::testing::read_bytes(dir.file("a")), fseg::testing::read_bytes(dir.file("c")));
}

TEST(TrainSegFace, ArgmaxStableUnderPositiveScaling) {
  const auto train = oracle_training_set(60, 13);
  auto model = train_segface(train, small_params());
  std::vector<std::size_t> before;
  for (const auto& ti : train) {
    std::vector<double> s;
    for (const auto& lp : ti.proposals) s.push_back(score_proposal_segface(lp.proposal, model, ti.image));
    before.push_back(static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin()));
  }
  for (auto& w : model.master.weights) w *= 3.5;
  model.master.bias *= 3.5;
  for (std::size_t i = 0; i < train.size(); ++i) {
    std::vector<double> s;
    for (const auto& lp : train[i].proposals) s.push_back(score_proposal_segface(lp.proposal, model, train[i].image));
    EXPECT_EQ(static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin()), before[i]);
  }
}

TEST(TrainSegFace, NeedsBothClasses) {
  auto train = oracle_training_set(10, 14);
  for (auto& ti : train)
    for (auto& lp : ti.proposals) lp.label = Label::Face;
  EXPECT_THROW(train_segface(train, small_params()), Error);
}

TEST(SegFaceModelFile, RejectsWrongMagic) {
  TempDir dir("sf");
  fseg::testing::write_bytes(dir.file("m"), "DEEPSEGFACE-MODEL v1\n");
  try {
    load_segface(dir.file("m"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ModelVersionMismatch);
  }
  try {
    load_segface(dir.file("missing"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInput);
  }
}
