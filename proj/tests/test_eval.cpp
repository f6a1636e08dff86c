#include <gtest/gtest.h>

#include <fstream>

#include "eval_oracle.hpp"
#include "fseg/pipeline.hpp"
#include "test_util.hpp"

using namespace fseg;
using fseg::testing::TempDir;

namespace {

ImageResult result(const std::string& id, std::optional<BoxI> truth, std::optional<BoxI> box, double score = 0.0) {
  return ImageResult{id, truth, box, score};
}

// Two faces found at scores .9 and .4, one negative detected at .5, one
// negative without a detection.
std::vector<ImageResult> hand_set() {
  const BoxI f{10, 10, 40, 40};
  return {result("a", f, f, 0.9), result("b", f, f, 0.4), result("c", std::nullopt, BoxI{0, 0, 20, 20}, 0.5),
          result("d", std::nullopt, std::nullopt)};
}

const CurvePoint& at_threshold(const std::vector<CurvePoint>& c, double t) {
  for (const auto& p : c)
    if (p.threshold == t) return p;
  throw std::runtime_error("threshold not on curve");
}

}  // namespace

TEST(Iou, Examples) {
  EXPECT_EQ(iou({3, 4, 10, 12}, {3, 4, 10, 12}), 1.0);
  EXPECT_EQ(iou({0, 0, 5, 5}, {10, 10, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 1}, {1, 0, 2, 1}), 1.0 / 3.0);
}

TEST(Iou, SymmetricInUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const BoxI a{rng.range(-20, 20), rng.range(-20, 20), rng.range(1, 30), rng.range(1, 30)};
    const BoxI b{rng.range(-20, 20), rng.range(-20, 20), rng.range(1, 30), rng.range(1, 30)};
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
  }
}

TEST(Roc, PerfectScorer) {
  const BoxI f{0, 0, 30, 30};
  const std::vector<ImageResult> rs = {result("a", f, f, 0.7), result("b", f, f, 0.2), result("c", std::nullopt, std::nullopt)};
  EXPECT_EQ(tar_at_far(rs, 0.0), 1.0);
  EXPECT_EQ(recall_at_precision(rs, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(rs), 1.0);
}

TEST(Roc, HandSet) {
  const auto rs = hand_set();
  const auto c = roc_curve(rs);
  EXPECT_EQ(at_threshold(c, 0.9).tar, 0.5);
  EXPECT_EQ(at_threshold(c, 0.9).far, 0.0);
  EXPECT_EQ(at_threshold(c, 0.9).precision, 1.0);
  EXPECT_EQ(at_threshold(c, 0.4).tar, 1.0);
  EXPECT_EQ(at_threshold(c, 0.4).far, 0.5);
  EXPECT_EQ(tar_at_far(rs, 0.01), 0.5);
  EXPECT_EQ(recall_at_precision(rs, 0.99), 0.5);
  // (0,0) -> (0,.5) -> (.5,.5) -> (.5,1) -> extend to FAR 1
  EXPECT_DOUBLE_EQ(roc_auc(rs), 0.5 * 0.5 + 0.5 * 1.0);
}

TEST(Roc, LowOverlapNeverCounts) {
  const BoxI f{0, 0, 40, 40};
  const std::vector<ImageResult> rs = {result("a", f, BoxI{25, 0, 40, 40}, 0.99), result("b", std::nullopt, std::nullopt)};
  for (const auto& p : roc_curve(rs)) EXPECT_EQ(p.tar, 0.0);
  EXPECT_EQ(recall_at_precision(rs, 0.99), 0.0);
}

TEST(Roc, AllFalsePositives) {
  const std::vector<ImageResult> rs = {result("a", std::nullopt, BoxI{0, 0, 5, 5}, 0.3),
                                       result("b", BoxI{50, 50, 10, 10}, BoxI{0, 0, 5, 5}, 0.6)};
  EXPECT_EQ(recall_at_precision(rs, 0.99), 0.0);
}

TEST(Roc, NeedsNegativeImages) {
  const BoxI f{0, 0, 30, 30};
  try {
    roc_curve({result("a", f, f, 0.5)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoNegativeImages);
  }
}

TEST(Roc, MonotoneStepCurves) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto rs = fseg::testing::random_results(rng, rng.range(2, 200));
    const auto c = pr_curve(rs);
    for (std::size_t i = 1; i < c.size(); ++i) {
      EXPECT_LT(c[i].threshold, c[i - 1].threshold);
      EXPECT_GE(c[i].tar, c[i - 1].tar);
      EXPECT_GE(c[i].far, c[i - 1].far);
    }
    EXPECT_EQ(c.front().tar, 0.0);
    EXPECT_EQ(c.front().far, 0.0);
  }
}

TEST(Roc, MatchesBruteForceSweep) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto rs = fseg::testing::random_results(rng, rng.range(1, 200));
    rs.push_back(result("neg", std::nullopt, std::nullopt));
    for (double far : {0.0, 0.01, 0.1, 0.5})
      EXPECT_EQ(tar_at_far(rs, far), fseg::testing::oracle_tar_at_far(rs, far));
    for (double prec : {0.5, 0.9, 0.99, 1.0})
      EXPECT_EQ(recall_at_precision(rs, prec), fseg::testing::oracle_recall_at_precision(rs, prec));
    for (const auto& p : roc_curve(rs)) {
      if (!std::isfinite(p.threshold)) continue;
      const auto o = fseg::testing::oracle_point(rs, p.threshold);
      EXPECT_EQ(p.tar, o.tar);
      EXPECT_EQ(p.far, o.far);
      EXPECT_EQ(p.precision, o.precision);
    }
  }
}

TEST(Coverage, Examples) {
  const BoxI f{0, 0, 40, 40};
  const std::map<std::string, std::optional<BoxI>> truths = {{"a", f}, {"b", f}, {"c", f}, {"n", std::nullopt}};
  ProposalsByImage own;
  for (const auto& [id, t] : truths)
    if (t) own[id] = {Proposal{{}, *t, 0, id}};
  EXPECT_EQ(coverage_upper_bound(own, truths), 1.0);
  EXPECT_EQ(coverage_upper_bound({}, truths), 0.0);

  // Shifts of 10 px give IoU 30/50 = 0.6; 21 px gives 19/61 ~ 0.31.
  ProposalsByImage hand;
  hand["a"] = {Proposal{{}, BoxI{10, 0, 40, 40}, 0, "a"}};
  hand["b"] = {Proposal{{}, BoxI{0, 10, 40, 40}, 0, "b"}};
  hand["c"] = {Proposal{{}, BoxI{21, 0, 40, 40}, 0, "c"}};
  EXPECT_NEAR(iou(hand["a"][0].box, f), 0.6, 1e-12);
  EXPECT_NEAR(iou(hand["c"][0].box, f), 0.3, 0.02);
  EXPECT_DOUBLE_EQ(coverage_upper_bound(hand, truths), 2.0 / 3.0);
}

TEST(Coverage, ReportTable) {
  const BoxI f{0, 0, 40, 40};
  const std::map<std::string, std::optional<BoxI>> truths = {{"a", f}, {"n", std::nullopt}};
  ProposalsByImage props;
  props["a"] = {Proposal{{}, f, 0, "a"}, Proposal{{}, BoxI{10, 0, 40, 40}, 0, "a"}};
  props["n"] = {Proposal{{}, f, 0, "n"}};
  const auto rep = coverage_report(props, truths);
  ASSERT_EQ(rep.table.size(), 9u);
  for (const auto& row : rep.table) {
    EXPECT_NEAR(row.positive_fraction + row.negative_fraction, 1.0, 1e-12);
    const double expect = row.overlap <= 0.6 ? 2.0 / 3.0 : 1.0 / 3.0;
    EXPECT_NEAR(row.positive_fraction, expect, 1e-12) << row.overlap;
    EXPECT_EQ(row.coverage, 1.0);
  }
}

TEST(Bottleneck, TarNeverExceedsCoverage) {
  // Detections are always drawn from the proposal set, as in the pipeline.
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    std::map<std::string, std::optional<BoxI>> truths;
    ProposalsByImage props;
    std::vector<ImageResult> rs;
    for (int i = 0; i < 40; ++i) {
      const std::string id = std::to_string(i);
      std::optional<BoxI> truth;
      if (rng.bernoulli(0.8)) truth = BoxI{rng.range(0, 60), rng.range(0, 60), 40, 40};
      truths[id] = truth;
      auto& list = props[id];
      const int n = rng.range(0, 4);
      for (int j = 0; j < n; ++j)
        list.push_back(Proposal{{}, BoxI{rng.range(0, 60), rng.range(0, 60), rng.range(30, 50), rng.range(30, 50)}, 0, id});
      ImageResult r{id, truth, std::nullopt, 0.0};
      if (!list.empty()) {
        r.box = list[static_cast<std::size_t>(rng.range(0, n - 1))].box;
        r.score = rng.uniform();
      }
      rs.push_back(r);
    }
    rs.push_back(ImageResult{"neg", std::nullopt, std::nullopt, 0.0});
    truths["neg"] = std::nullopt;
    const auto s = evaluate(rs, props, truths, EvalParams{});
    EXPECT_TRUE(s.bottleneck_ok);
    for (const auto& p : s.curve) EXPECT_LE(p.tar, s.coverage + 1e-12);
  }
}

TEST(Bottleneck, ViolationIsReported) {
  const BoxI f{0, 0, 40, 40};
  const std::vector<ImageResult> rs = {result("a", f, f, 0.9), result("n", std::nullopt, std::nullopt)};
  const std::map<std::string, std::optional<BoxI>> truths = {{"a", f}, {"n", std::nullopt}};
  const auto s = evaluate(rs, {}, truths, EvalParams{});
  EXPECT_FALSE(s.bottleneck_ok);
  TempDir dir("eval_bn");
  try {
    write_eval(dir.path().string(), "segface", s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvariantViolation);
  }
}

TEST(Reports, CsvLayout) {
  const auto rs = hand_set();
  const BoxI f{10, 10, 40, 40};
  const std::map<std::string, std::optional<BoxI>> truths = {
      {"a", f}, {"b", f}, {"c", std::nullopt}, {"d", std::nullopt}};
  ProposalsByImage props;
  props["a"] = {Proposal{{}, f, 0, "a"}};
  props["b"] = {Proposal{{}, f, 0, "b"}};
  const auto s = evaluate(rs, props, truths, EvalParams{});
  TempDir dir("eval_csv");
  write_eval(dir.path().string(), "deepsegface", s);
  const auto curve = fseg::testing::read_bytes(dir.file("deepsegface_curve.csv"));
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "threshold,tar,far,precision,recall");
  const auto summary = fseg::testing::read_bytes(dir.file("deepsegface_summary.csv"));
  EXPECT_NE(summary.find("metric,value\n"), std::string::npos);
  EXPECT_NE(summary.find("tar_at_far_0.01,0.5\n"), std::string::npos);
  EXPECT_NE(summary.find("recall_at_prec_0.99,0.5\n"), std::string::npos);
  EXPECT_NE(summary.find("coverage_0.5,1\n"), std::string::npos);
  const auto cov = fseg::testing::read_bytes(dir.file("deepsegface_coverage.csv"));
  EXPECT_EQ(cov.substr(0, cov.find('\n')), "overlap,positive_fraction,negative_fraction,coverage");
}

TEST(Results, FileRoundTrip) {
  TempDir dir("eval_res");
  const auto rs = hand_set();
  std::map<std::string, std::optional<BoxI>> truths;
  for (const auto& r : rs) truths[r.id] = r.truth;
  write_results(dir.file("r.csv"), rs);
  const auto back = read_results(dir.file("r.csv"), truths);
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(back[i].id, rs[i].id);
    EXPECT_EQ(back[i].truth, rs[i].truth);
    EXPECT_EQ(back[i].box, rs[i].box);
    if (rs[i].box) { EXPECT_EQ(back[i].score, rs[i].score); }
  }
  truths.erase("a");
  try {
    read_results(dir.file("r.csv"), truths);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInput);
  }
}
