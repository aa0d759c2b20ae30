#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rgbd/depth_image.hpp"
#include "rgbd/eval.hpp"
#include "rgbd/fusion.hpp"
#include "rgbd/geometry.hpp"

namespace rgbd {

// Upright slab facing the camera: a width_m x height_m rectangle standing
// on the floor at constant depth z_m, centered at x_m.
struct PersonSpec {
  double x_m = 0.0;
  double z_m = 3.0;
  double width_m = 0.6;
  double height_m = 1.7;
};

// Synthetic scene: flat floor below the camera plus person slabs, rendered
// with a per-pixel z-buffer and keyed noise streams. floor_height_m is the
// camera height above the floor (floor plane y = floor_height_m in the
// y-down frame).
struct SceneSpec {
  CameraIntrinsics camera{525.0, 525.0, 319.5, 239.5};
  int width = 640;
  int height = 480;
  double floor_height_m = 1.4;
  std::vector<PersonSpec> persons;
  double depth_noise_sigma_mm = 0.0;
  double invalid_fraction = 0.0;
  double max_depth_m = 65.0;  // beyond sensor range renders invalid
  std::uint64_t seed = 0;
};

struct RenderResult {
  DepthImage depth;
  // Square upper-body boxes (top width x width of each slab), care = true.
  // Only boxes that project fully inside the image are emitted.
  std::vector<Annotation> annotations;
  GroundPlane plane;  // ground-truth floor plane; inlier stats describe the
                      // rendered floor pixels
};

// Deterministic per (spec, seed); frame_id only tags the annotations.
RenderResult render(const SceneSpec& spec, int frame_id = 0);

namespace serial {
RenderResult render(const SceneSpec& spec, int frame_id = 0);
}

// Noise model for the oracle scorers standing in for the two CNNs. The
// base jitter/flip terms apply everywhere; the depth_extra terms ramp in
// linearly between ramp_near_m and ramp_far_m, and iou_attenuation scales
// the effective overlap down over the same ramp, mimicking depth sensors
// degrading with distance.
struct OracleNoise {
  double logistic_k = 14.0;    // slope of the IoU -> probability curve
  double logistic_mid = 0.5;   // IoU at probability 0.5
  double jitter_sigma = 0.0;
  double flip_prob = 0.0;
  double depth_extra_jitter = 0.0;
  double depth_extra_flip = 0.0;
  double iou_attenuation = 0.0;
  double ramp_near_m = 1.0;
  double ramp_far_m = 6.0;
};

// Declared default profiles: color noise is distance-independent; depth is
// nearly clean up close and degrades toward the far end of the ramp.
OracleNoise color_noise_profile();
OracleNoise depth_noise_profile();

// Scores a proposal by its best IoU against the frame's annotations mapped
// through a logistic curve, with seeded per-proposal noise. Stateless per
// call, so safe for concurrent queries.
class OracleScorer : public Scorer {
 public:
  OracleScorer(std::span<const Annotation> annotations,
               const OracleNoise& noise, std::uint64_t seed);

  double score(int frame, const Proposal& p) const override;

 private:
  std::unordered_map<int, std::vector<Box>> boxes_;
  OracleNoise noise_;
  std::uint64_t seed_;
};

}  // namespace rgbd
