#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rgbd/fusion.hpp"
#include "rgbd/roi.hpp"
#include "rgbd/rng.hpp"
#include "rgbd/synth.hpp"

using namespace rgbd;

namespace {

const CameraIntrinsics kKinect{525.0, 525.0, 319.5, 239.5};

SceneSpec two_person_scene() {
  SceneSpec spec;
  spec.persons.push_back({-0.8, 2.5, 0.6, 1.7});
  spec.persons.push_back({0.9, 4.5, 0.6, 1.8});
  return spec;
}

double angle_deg(const Point3& n) {
  return std::acos(std::clamp(std::fabs(n.y), 0.0, 1.0)) * 180.0 /
         std::numbers::pi;
}

}  // namespace

TEST_CASE("window_width follows fW/Z") {
  RoiConfig cfg;
  CHECK(window_width(3.0, kKinect, cfg) == 105);
  CHECK(window_width(1.5, kKinect, cfg) == 210);
  CameraIntrinsics k500{500.0, 500.0, 319.5, 239.5};
  CHECK(window_width(0.6, k500, cfg) == 500);
  CHECK_THROWS_AS(window_width(0.0, kKinect, cfg), std::invalid_argument);
  CHECK_THROWS_AS(window_width(-1.0, kKinect, cfg), std::invalid_argument);
}

TEST_CASE("window_width floors at min_side") {
  RoiConfig cfg;
  CHECK(window_width(10.0, kKinect, cfg) == 50);  // 31.5 px would be tiny
}

TEST_CASE("window width halves when depth doubles") {
  RoiConfig cfg;
  cfg.min_side_px = 1;
  SplitMix64 rng(31);
  for (int i = 0; i < 200; ++i) {
    double z = 0.5 + 9.0 * rng.u01();
    int w1 = window_width(z, kKinect, cfg);
    int w2 = window_width(2.0 * z, kKinect, cfg);
    CHECK(std::abs(w2 - (w1 + 1) / 2) <= 1);
  }
}

TEST_CASE("generate_proposals on an empty frame") {
  DepthImage img(64, 48);
  RoiConfig cfg;
  CHECK(generate_proposals(img, std::nullopt, kKinect, cfg).empty());
}

TEST_CASE("generate_proposals: single valid pixel grows one centered window") {
  DepthImage img(640, 480);
  img.at(320, 240) = 3000.0f;
  RoiConfig cfg;
  auto props = generate_proposals(img, std::nullopt, kKinect, cfg);
  REQUIRE(props.size() == 1);
  CHECK(props[0].side == 105);
  CHECK(props[0].x == 320 - 105 / 2);
  CHECK(props[0].y == 240 - 105 / 2);
  CHECK(props[0].depth_m == doctest::Approx(3.0));
}

TEST_CASE("proposals are square, in bounds, at least min_side") {
  SplitMix64 rng(32);
  DepthImage img(320, 240);
  for (auto& d : img.data)
    d = rng.u01() < 0.3 ? 0.0f : static_cast<float>(400 + rng.below(9000));
  RoiConfig cfg;
  auto props = generate_proposals(img, std::nullopt, kKinect, cfg);
  REQUIRE(!props.empty());
  for (const Proposal& p : props) {
    CHECK(p.side >= cfg.min_side_px);
    CHECK(p.x >= 0);
    CHECK(p.y >= 0);
    CHECK(p.x + p.side <= img.width);
    CHECK(p.y + p.side <= img.height);
    CHECK(p.depth_m > 0.0);
  }
}

TEST_CASE("without a plane the sweep degenerates to a sliding window") {
  SplitMix64 rng(33);
  DepthImage img(96, 72);
  for (auto& d : img.data)
    d = rng.u01() < 0.4 ? 0.0f : static_cast<float>(1000 + rng.below(5000));
  RoiConfig cfg;
  cfg.stride_px = 4;

  long lattice_valid = 0;
  for (int v = 0; v < img.height; v += cfg.stride_px)
    for (int u = 0; u < img.width; u += cfg.stride_px)
      if (img.at(u, v) > 0.0f) ++lattice_valid;

  auto props = generate_proposals(img, std::nullopt, kKinect, cfg);
  CHECK(static_cast<long>(props.size()) == lattice_valid);
}

TEST_CASE("filter_proposals keeps exactly the sufficiently valid windows") {
  DepthImage img(3, 3);
  img.at(0, 0) = 1000.0f;
  img.at(1, 0) = 1000.0f;
  img.at(2, 1) = 1000.0f;
  img.at(0, 2) = 1000.0f;  // 4 valid of 9
  ValidityIntegral vi = build_validity_integral(img);

  std::vector<Proposal> props{{0, 0, 3, 1.0}};
  RoiConfig cfg;
  cfg.valid_fraction_min = 1.0 / 3.0;
  CHECK(filter_proposals(props, vi, cfg).size() == 1);  // 4/9 >= 1/3
  cfg.valid_fraction_min = 0.5;
  CHECK(filter_proposals(props, vi, cfg).empty());  // 4/9 < 1/2
}

TEST_CASE("filter_proposals: fully valid frame keeps everything, holes drop") {
  DepthImage img(100, 100);
  for (auto& d : img.data) d = 2000.0f;
  for (int y = 40; y < 100; ++y)  // bottom-left block has no depth
    for (int x = 0; x < 50; ++x) img.at(x, y) = 0.0f;
  ValidityIntegral vi = build_validity_integral(img);

  RoiConfig cfg;
  std::vector<Proposal> props{{0, 0, 30, 2.0},    // fully valid
                              {5, 60, 30, 2.0},   // fully invalid
                              {60, 60, 30, 2.0}};  // valid right side
  auto kept = filter_proposals(props, vi, cfg);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].box() == Box{0, 0, 30});
  CHECK(kept[1].box() == Box{60, 60, 30});
}

TEST_CASE("filter_proposals is a subset and idempotent") {
  SplitMix64 rng(34);
  DepthImage img(80, 60);
  for (auto& d : img.data)
    d = rng.u01() < 0.5 ? 0.0f : static_cast<float>(900 + rng.below(4000));
  ValidityIntegral vi = build_validity_integral(img);

  std::vector<Proposal> props;
  for (int i = 0; i < 200; ++i) {
    int side = 4 + static_cast<int>(rng.below(30));
    props.push_back({static_cast<int>(rng.below(70)),
                     static_cast<int>(rng.below(50)), side, 2.0});
  }
  RoiConfig cfg;
  auto kept = filter_proposals(props, vi, cfg);
  CHECK(kept.size() <= props.size());
  auto again = filter_proposals(kept, vi, cfg);
  REQUIRE(again.size() == kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    CHECK(again[i].box() == kept[i].box());
}

TEST_CASE("GPD recovers the floor of a synthetic scene") {
  SceneSpec spec = two_person_scene();
  spec.depth_noise_sigma_mm = 10.0;
  spec.invalid_fraction = 0.1;
  spec.seed = 5;
  RenderResult scene = render(spec);

  RoiConfig cfg;
  GridStats grid;
  auto plane = detect_ground_plane(scene.depth, spec.camera, cfg, 17, &grid);
  REQUIRE(plane.has_value());
  CHECK(angle_deg(plane->normal) < 2.0);
  CHECK(std::fabs(plane->offset - scene.plane.offset) < 0.03);

  // Cells holding the full-height person slabs spread far beyond the VSTD
  // cutoff and must have been dropped.
  for (const PersonSpec& person : spec.persons) {
    const GridCellStats& cell =
        grid.cells[grid.cell_index(person.x_m, person.z_m)];
    REQUIRE(cell.count > 0);
    CHECK(cell.vstd > cfg.vstd_threshold_m);
  }
}

TEST_CASE("GPD: no valid lower half means no plane") {
  DepthImage img(64, 48);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 64; ++x) img.at(x, y) = 2000.0f;  // upper rows only
  RoiConfig cfg;
  CHECK_FALSE(detect_ground_plane(img, kKinect, cfg, 3).has_value());
}

TEST_CASE("GPD on a noiseless floor keeps every sampled point as inlier") {
  SceneSpec spec;  // floor only
  RenderResult scene = render(spec);
  RoiConfig cfg;
  auto plane = detect_ground_plane(scene.depth, spec.camera, cfg, 11);
  REQUIRE(plane.has_value());
  auto pts = sample_lower_half(scene.depth, spec.camera, cfg.stride_px);
  CHECK(plane->inlier_count == static_cast<int>(pts.size()));
  CHECK(plane->inlier_rms < 1e-6);
}

TEST_CASE("plane rejection leaves no anchors on the floor") {
  SceneSpec floor_only;
  RenderResult scene = render(floor_only);
  RoiConfig cfg;
  auto plane = detect_ground_plane(scene.depth, floor_only.camera, cfg, 11);
  REQUIRE(plane.has_value());
  auto props = generate_proposals(scene.depth, plane, floor_only.camera, cfg);
  CHECK(props.empty());
}

TEST_CASE("two-person scene yields an overlapping proposal per person") {
  SceneSpec spec = two_person_scene();
  RenderResult scene = render(spec);
  REQUIRE(scene.annotations.size() == 2);

  RoiConfig cfg;
  auto plane = detect_ground_plane(scene.depth, spec.camera, cfg, 23);
  REQUIRE(plane.has_value());
  auto props = generate_proposals(scene.depth, plane, spec.camera, cfg);
  ValidityIntegral vi = build_validity_integral(scene.depth);
  props = filter_proposals(props, vi, cfg);

  for (const Annotation& ann : scene.annotations) {
    double best = 0.0;
    for (const Proposal& p : props)
      best = std::max(best, iou(p.box(), ann.box));
    CHECK(best >= 0.5);
  }
}
