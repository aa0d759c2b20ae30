// The OpenMP kernels must produce bit-identical results to the serial
// reference implementations, on anything.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rgbd/depth_image.hpp"
#include "rgbd/encoding.hpp"
#include "rgbd/eval.hpp"
#include "rgbd/fusion.hpp"
#include "rgbd/geometry.hpp"
#include "rgbd/roi.hpp"
#include "rgbd/rng.hpp"
#include "rgbd/synth.hpp"

using namespace rgbd;

namespace {

const CameraIntrinsics kKinect{525.0, 525.0, 319.5, 239.5};

DepthImage random_depth(int w, int h, SplitMix64& rng) {
  DepthImage img(w, h);
  for (auto& d : img.data)
    d = rng.u01() < 0.35 ? 0.0f : static_cast<float>(400 + rng.below(9000));
  return img;
}

bool same_proposals(const std::vector<Proposal>& a,
                    const std::vector<Proposal>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].box() != b[i].box() || a[i].depth_m != b[i].depth_m)
      return false;
  return true;
}

}  // namespace

TEST_CASE("fill_holes, normalize, equalize match the serial reference") {
  SplitMix64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    DepthImage img = random_depth(50 + trial * 7, 40 + trial * 3, rng);
    CHECK(fill_holes(img, 2, 3).data == serial::fill_holes(img, 2, 3).data);
    CHECK(normalize(img).data == serial::normalize(img).data);

    GrayImage gray = normalize(img);
    auto mask = validity_mask(img);
    CHECK(equalize(gray, mask).data == serial::equalize(gray, mask).data);
  }
}

TEST_CASE("encode matches the serial reference for every scheme") {
  SplitMix64 rng(72);
  DepthImage img = random_depth(80, 64, rng);
  for (auto scheme : {EncodingScheme::DG, EncodingScheme::CE,
                      EncodingScheme::CD, EncodingScheme::CECD})
    CHECK(encode(img, scheme).data == serial::encode(img, scheme).data);
}

TEST_CASE("ransac matches the serial reference") {
  SplitMix64 rng(73);
  std::vector<Point3> pts;
  for (int i = 0; i < 200; ++i)
    pts.push_back({3.0 * rng.u01(), 1.3 + 0.02 * rng.gauss(), 4.0 * rng.u01()});
  for (int i = 0; i < 60; ++i)
    pts.push_back({3.0 * rng.u01(), 2.5 * rng.u01(), 4.0 * rng.u01()});

  for (std::uint64_t seed : {1ull, 9ull, 77ull}) {
    auto p = fit_plane_ransac(pts, 300, 0.04, seed);
    auto s = serial::fit_plane_ransac(pts, 300, 0.04, seed);
    REQUIRE(p.has_value());
    REQUIRE(s.has_value());
    CHECK(p->normal.x == s->normal.x);
    CHECK(p->normal.y == s->normal.y);
    CHECK(p->normal.z == s->normal.z);
    CHECK(p->offset == s->offset);
    CHECK(p->inlier_count == s->inlier_count);
    CHECK(p->inlier_rms == s->inlier_rms);
  }
}

TEST_CASE("ROI stages match the serial reference") {
  SceneSpec spec;
  spec.persons.push_back({-0.6, 2.0, 0.6, 1.7});
  spec.persons.push_back({0.7, 3.5, 0.5, 1.6});
  spec.depth_noise_sigma_mm = 12.0;
  spec.invalid_fraction = 0.15;
  spec.seed = 41;
  DepthImage img = render(spec).depth;

  RoiConfig cfg;
  auto plane_p = detect_ground_plane(img, spec.camera, cfg, 5);
  auto plane_s = serial::detect_ground_plane(img, spec.camera, cfg, 5);
  REQUIRE(plane_p.has_value());
  REQUIRE(plane_s.has_value());
  CHECK(plane_p->normal.y == plane_s->normal.y);
  CHECK(plane_p->offset == plane_s->offset);

  auto props_p = generate_proposals(img, plane_p, spec.camera, cfg);
  auto props_s = serial::generate_proposals(img, plane_s, spec.camera, cfg);
  CHECK(same_proposals(props_p, props_s));

  // integral-image filtering vs. direct counting on the raster
  ValidityIntegral vi = build_validity_integral(img);
  auto kept_p = filter_proposals(props_p, vi, cfg);
  auto kept_s = serial::filter_proposals(props_p, img, cfg);
  CHECK(same_proposals(kept_p, kept_s));
}

TEST_CASE("scoring matches the serial reference") {
  SceneSpec spec;
  spec.persons.push_back({0.0, 3.0, 0.6, 1.7});
  spec.seed = 2;
  RenderResult scene = render(spec);

  RoiConfig cfg;
  auto props = generate_proposals(scene.depth, std::nullopt, spec.camera, cfg);
  REQUIRE(props.size() > 100);

  OracleScorer color(scene.annotations, color_noise_profile(), 11);
  OracleScorer depth(scene.annotations, depth_noise_profile(), 12);
  auto par = score_frame(0, props, color, depth);
  auto ser = serial::score_frame(0, props, color, depth);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].p_color == ser[i].p_color);
    CHECK(par[i].p_depth == ser[i].p_depth);
    CHECK(par[i].p_fused == ser[i].p_fused);
  }
}

TEST_CASE("render matches the serial reference") {
  SceneSpec spec;
  spec.persons.push_back({0.3, 2.8, 0.6, 1.75});
  spec.depth_noise_sigma_mm = 10.0;
  spec.invalid_fraction = 0.1;
  spec.seed = 2024;
  CHECK(render(spec).depth.data == serial::render(spec).depth.data);
}

TEST_CASE("pr_curve matches the serial reference") {
  SplitMix64 rng(74);
  std::vector<Detection> dets;
  std::vector<Annotation> anns;
  for (int f = 0; f < 4; ++f) {
    for (int i = 0; i < 12; ++i)
      dets.push_back({f,
                      {static_cast<int>(rng.below(100)),
                       static_cast<int>(rng.below(100)),
                       8 + static_cast<int>(rng.below(20))},
                      rng.u01()});
    for (int i = 0; i < 5; ++i)
      anns.push_back({f,
                      {static_cast<int>(rng.below(100)),
                       static_cast<int>(rng.below(100)),
                       8 + static_cast<int>(rng.below(20))},
                      rng.u01() < 0.8});
  }
  auto thresholds = score_thresholds(dets);
  auto par = pr_curve(dets, anns, thresholds, 0.5);
  auto ser = serial::pr_curve(dets, anns, thresholds, 0.5);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].precision == ser[i].precision);
    CHECK(par[i].recall == ser[i].recall);
    CHECK(par[i].tp == ser[i].tp);
    CHECK(par[i].fp == ser[i].fp);
    CHECK(par[i].fn == ser[i].fn);
  }
}
