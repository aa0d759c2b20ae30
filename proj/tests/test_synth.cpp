#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rgbd/roi.hpp"
#include "rgbd/synth.hpp"

using namespace rgbd;

TEST_CASE("render is bit-deterministic per spec and seed") {
  SceneSpec spec;
  spec.persons.push_back({0.2, 3.0, 0.6, 1.7});
  spec.depth_noise_sigma_mm = 8.0;
  spec.invalid_fraction = 0.2;
  spec.seed = 99;

  RenderResult a = render(spec);
  RenderResult b = render(spec);
  CHECK(a.depth.data == b.depth.data);
  REQUIRE(a.annotations.size() == b.annotations.size());
  for (std::size_t i = 0; i < a.annotations.size(); ++i)
    CHECK(a.annotations[i].box == b.annotations[i].box);

  spec.seed = 100;
  RenderResult c = render(spec);
  CHECK(a.depth.data != c.depth.data);  // the seed actually matters
}

TEST_CASE("noiseless empty scene: lower-half pixels all sit on the floor") {
  SceneSpec spec;  // no persons, no noise
  RenderResult res = render(spec);

  long checked = 0;
  for (int v = spec.height / 2; v < spec.height; v += 3)
    for (int u = 0; u < spec.width; u += 7) {
      float d = res.depth.at(u, v);
      if (d <= 0.0f) continue;
      Point3 p = back_project(u, v, d, spec.camera);
      CHECK(plane_distance(p, res.plane) < 1e-6);
      ++checked;
    }
  CHECK(checked > 1000);
}

TEST_CASE("annotation side follows the projection arithmetic") {
  SceneSpec spec;
  spec.persons.push_back({0.0, 3.0, 0.6, 1.7});
  RenderResult res = render(spec);
  REQUIRE(res.annotations.size() == 1);
  CHECK(std::abs(res.annotations[0].box.side - 105) <= 1);
}

TEST_CASE("persons projecting outside the image are not annotated") {
  SceneSpec spec;
  spec.persons.push_back({5.0, 2.0, 0.6, 1.7});  // far off to the right
  RenderResult res = render(spec);
  CHECK(res.annotations.empty());
}

TEST_CASE("invalid_fraction zeroes about the requested share") {
  SceneSpec spec;
  spec.invalid_fraction = 0.5;
  spec.seed = 3;
  RenderResult res = render(spec);

  SceneSpec clean = spec;
  clean.invalid_fraction = 0.0;
  RenderResult full = render(clean);

  long valid = 0, was_valid = 0;
  for (std::size_t i = 0; i < res.depth.data.size(); ++i) {
    if (full.depth.data[i] > 0.0f) {
      ++was_valid;
      if (res.depth.data[i] > 0.0f) ++valid;
    }
  }
  REQUIRE(was_valid > 0);
  double kept = static_cast<double>(valid) / static_cast<double>(was_valid);
  CHECK(kept > 0.49);
  CHECK(kept < 0.51);
}

TEST_CASE("GPD nails the plane on a clean rendered scene") {
  SceneSpec spec;
  spec.persons.push_back({-0.5, 2.2, 0.6, 1.7});
  RenderResult res = render(spec);

  RoiConfig cfg;
  auto plane = detect_ground_plane(res.depth, spec.camera, cfg, 7);
  REQUIRE(plane.has_value());
  CHECK(plane->inlier_rms < 1e-6);
  CHECK(std::fabs(plane->normal.y - 1.0) < 1e-6);
  CHECK(std::fabs(plane->offset - (-1.4)) < 1e-6);
}

TEST_CASE("oracle scorer saturates without noise") {
  std::vector<Annotation> anns{{0, {100, 100, 80}, true}};
  OracleNoise clean;  // no jitter, no flips, no attenuation
  OracleScorer scorer(anns, clean, 5);

  Proposal hit{100, 100, 80, 3.0};
  Proposal miss{400, 300, 60, 3.0};
  CHECK(scorer.score(0, hit) >= 0.95);
  CHECK(scorer.score(0, miss) <= 0.05);
  // annotations of other frames do not leak
  CHECK(scorer.score(1, hit) <= 0.05);
}

TEST_CASE("depth profile scores the same overlap lower when far") {
  std::vector<Annotation> anns{{0, {100, 100, 80}, true},
                               {0, {400, 100, 80}, true}};
  OracleNoise profile = depth_noise_profile();
  profile.jitter_sigma = 0.0;  // isolate the deterministic attenuation
  profile.flip_prob = 0.0;
  profile.depth_extra_jitter = 0.0;
  profile.depth_extra_flip = 0.0;
  REQUIRE(profile.iou_attenuation > 0.0);
  OracleScorer scorer(anns, profile, 5);

  Proposal near{100, 100, 80, 1.0};
  Proposal far{400, 100, 80, 7.0};  // identical IoU = 1 against its box
  CHECK(scorer.score(0, far) < scorer.score(0, near));

  Proposal near_partial{120, 100, 80, 1.0};
  Proposal far_partial{420, 100, 80, 7.0};
  CHECK(scorer.score(0, far_partial) < scorer.score(0, near_partial));
}

TEST_CASE("color profile is distance independent") {
  std::vector<Annotation> anns{{0, {100, 100, 80}, true},
                               {0, {400, 100, 80}, true}};
  OracleScorer scorer(anns, color_noise_profile(), 5);
  Proposal near{100, 100, 80, 1.0};
  Proposal far{400, 100, 80, 7.0};
  // same overlap, same noise stream statistics; only the keyed draw differs,
  // so the clean logistic value underneath must match: verify via a
  // noise-free twin
  OracleNoise clean;
  OracleScorer clean_scorer(anns, clean, 5);
  CHECK(clean_scorer.score(0, near) ==
        doctest::Approx(clean_scorer.score(0, far)).epsilon(1e-12));
}
