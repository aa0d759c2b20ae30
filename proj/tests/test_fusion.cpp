#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rgbd/fusion.hpp"
#include "rgbd/rng.hpp"

using namespace rgbd;

namespace {

ScoredProposal sp(int x, int y, int side, double fused) {
  ScoredProposal s;
  s.proposal = {x, y, side, 2.0};
  s.p_fused = fused;
  return s;
}

}  // namespace

TEST_CASE("weight: plateaus and the linear ramp") {
  CHECK(weight(0.5) == 1.0);
  CHECK(weight(1.0) == 1.0);
  CHECK(weight(3.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(weight(6.0) == 0.0);
  CHECK(weight(7.0) == 0.0);
}

TEST_CASE("weight is continuous and matches -(1/5)(d-1)+1 on (1,6)") {
  // both branch expressions agree at the knots
  CHECK(std::fabs(-(1.0 / 5.0) * (1.0 - 1.0) + 1.0 - weight(1.0)) < 1e-12);
  CHECK(std::fabs(-(1.0 / 5.0) * (6.0 - 1.0) + 1.0 - weight(6.0)) < 1e-12);
  for (int i = 1; i < 500; ++i) {
    double d = 1.0 + 5.0 * i / 500.0;
    CHECK(std::fabs(weight(d) - (-(1.0 / 5.0) * (d - 1.0) + 1.0)) < 1e-12);
  }
}

TEST_CASE("fuse: boundary weights select one modality") {
  CHECK(fuse(0.9, 0.1, 0.0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(fuse(0.9, 0.1, 1.0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("fuse: agreement fixed point and the hand-computed blend") {
  SplitMix64 rng(41);
  for (int i = 0; i < 100; ++i) {
    double p = rng.u01();
    CHECK(fuse(p, p, 0.5) == doctest::Approx(p).epsilon(1e-9));
  }
  // sqrt(0.45) / (sqrt(0.45) + sqrt(0.05)) = 0.75
  CHECK(fuse(0.9, 0.5, 0.5) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("fuse: monotone in each argument, normalized over classes") {
  SplitMix64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    double pc = rng.u01(), pd = rng.u01(), w = rng.u01();
    double f = fuse(pc, pd, w);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(fuse(std::min(pc + 0.05, 1.0), pd, w) >= f - 1e-12);
    CHECK(fuse(pc, std::min(pd + 0.05, 1.0), w) >= f - 1e-12);
    CHECK(std::fabs(f + fuse(1.0 - pc, 1.0 - pd, w) - 1.0) < 1e-9);
  }
}

TEST_CASE("iou golden values") {
  CHECK(iou({0, 0, 10}, {0, 0, 10}) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 10}, {20, 0, 10}) == doctest::Approx(0.0));
  CHECK(iou({0, 0, 10}, {5, 0, 10}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("nms: duplicate suppression and disjoint survival") {
  auto kept = nms({sp(10, 10, 20, 0.9), sp(10, 10, 20, 0.8)}, {});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].p_fused == 0.9);

  kept = nms({sp(0, 0, 10, 0.9), sp(50, 50, 10, 0.8)}, {});
  CHECK(kept.size() == 2);
}

TEST_CASE("nms: greedy trace keeps A and C") {
  // B overlaps A at ~0.6, C overlaps A at ~0.1; threshold 0.5.
  ScoredProposal a = sp(0, 0, 20, 0.9);
  ScoredProposal b = sp(0, 3, 20, 0.8);    // iou(a,b) = 17/23 ≈ 0.74
  ScoredProposal c = sp(17, 17, 20, 0.7);  // iou(a,c) = 9/791 ≈ 0.01
  REQUIRE(iou(a.proposal.box(), b.proposal.box()) > 0.5);
  REQUIRE(iou(a.proposal.box(), c.proposal.box()) < 0.5);

  NmsParams params;
  params.iou_threshold = 0.5;
  auto kept = nms({b, c, a}, params);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].p_fused == 0.9);
  CHECK(kept[1].p_fused == 0.7);
}

TEST_CASE("nms: score_min drops low scores first") {
  NmsParams params;
  params.score_min = 0.5;
  auto kept = nms({sp(0, 0, 10, 0.4), sp(40, 40, 10, 0.6)}, params);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].p_fused == 0.6);
}

TEST_CASE("nms output is non-overlapping, a subset, and stable") {
  SplitMix64 rng(43);
  NmsParams params;
  params.score_min = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredProposal> input;
    for (int i = 0; i < 40; ++i)
      input.push_back(sp(static_cast<int>(rng.below(60)),
                         static_cast<int>(rng.below(60)),
                         5 + static_cast<int>(rng.below(30)), rng.u01()));
    auto kept = nms(input, params);

    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        CHECK(iou(kept[i].proposal.box(), kept[j].proposal.box()) <=
              params.iou_threshold);

    auto again = nms(kept, params);
    REQUIRE(again.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      CHECK(again[i].proposal.box() == kept[i].proposal.box());
  }
}

TEST_CASE("nms kept set is invariant under increasing score transforms") {
  SplitMix64 rng(44);
  std::vector<ScoredProposal> input;
  for (int i = 0; i < 60; ++i)
    input.push_back(sp(static_cast<int>(rng.below(80)),
                       static_cast<int>(rng.below(80)),
                       8 + static_cast<int>(rng.below(25)), rng.u01()));

  NmsParams params;
  auto kept = nms(input, params);

  auto cubed = input;
  for (auto& s : cubed) s.p_fused = s.p_fused * s.p_fused * s.p_fused;
  NmsParams params2;
  params2.score_min = params.score_min * params.score_min * params.score_min;
  auto kept2 = nms(cubed, params2);

  REQUIRE(kept2.size() == kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    CHECK(kept2[i].proposal.box() == kept[i].proposal.box());
}

TEST_CASE("score_frame with constant scorers") {
  std::vector<Proposal> props{{0, 0, 10, 0.5}, {20, 0, 10, 3.0},
                              {40, 0, 10, 7.0}};
  ConstantScorer nine(0.9);
  auto scored = score_frame(0, props, nine, nine);
  for (const auto& s : scored)
    CHECK(s.p_fused == doctest::Approx(0.9).epsilon(1e-12));

  // At 7 m the weight is 0, so fusion ignores the depth stream entirely.
  ConstantScorer low(0.2), high(0.95);
  std::vector<Proposal> far{{0, 0, 10, 7.0}};
  auto far_scored = score_frame(0, far, low, high);
  CHECK(far_scored[0].p_fused == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("FileScorer round trip and missing-score diagnostics") {
  std::string path = "fusion_scores_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"frame":0,"x":10,"y":20,"side":30,"p":0.75})" << "\n";
    out << R"({"frame":1,"x":0,"y":0,"side":50,"p":0.25})" << "\n";
  }
  FileScorer fs = FileScorer::load(path);
  CHECK(fs.size() == 2);
  CHECK(fs.score(0, {10, 20, 30, 2.0}) == 0.75);
  CHECK(fs.score(1, {0, 0, 50, 2.0}) == 0.25);

  try {
    fs.score(0, {1, 2, 3, 2.0});
    FAIL("expected MissingScoreError");
  } catch (const MissingScoreError& e) {
    std::string msg = e.what();
    CHECK(msg.find("frame=0") != std::string::npos);
    CHECK(msg.find("x=1") != std::string::npos);
  }

  // score_frame propagates the failure out of the parallel loop
  std::vector<Proposal> props{{10, 20, 30, 2.0}, {9, 9, 9, 2.0}};
  CHECK_THROWS_AS(score_frame(0, props, fs, fs), MissingScoreError);
  std::remove(path.c_str());
}
