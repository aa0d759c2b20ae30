#include "rgbd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgbd/rng.hpp"

namespace rgbd {

namespace {

constexpr std::uint64_t kNoiseStream = 0x5ce11eull;
constexpr std::uint64_t kScoreStream = 0x0c0ebll;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Hit {
  double z = 0.0;       // 0 when nothing in range
  bool is_floor = false;
};

// Nearest surface along the pixel ray. The floor plane sits at
// y = floor_height_m; person slabs face the camera at constant z.
Hit trace_pixel(const SceneSpec& spec, int u, int v) {
  const CameraIntrinsics& K = spec.camera;
  double dx = (u - K.cx) / K.fx;
  double dy = (v - K.cy) / K.fy;

  double best = std::numeric_limits<double>::infinity();
  bool floor = false;
  if (dy > 0.0) {
    double z = spec.floor_height_m / dy;
    if (z > 0.0) {
      best = z;
      floor = true;
    }
  }
  for (const PersonSpec& person : spec.persons) {
    if (person.z_m <= 0.0 || person.z_m >= best) continue;
    double x = dx * person.z_m;
    double y = dy * person.z_m;
    double top = spec.floor_height_m - person.height_m;
    if (std::fabs(x - person.x_m) <= person.width_m / 2.0 && y >= top &&
        y <= spec.floor_height_m) {
      best = person.z_m;
      floor = false;
    }
  }
  if (!std::isfinite(best) || best > spec.max_depth_m) return {};
  return {best, floor};
}

float noisy_depth_mm(const SceneSpec& spec, double depth_m,
                     std::size_t pixel) {
  if (depth_m <= 0.0) return 0.0f;
  SplitMix64 rng(mix_seed(mix_seed(spec.seed, kNoiseStream), pixel));
  if (spec.invalid_fraction > 0.0 && rng.u01() < spec.invalid_fraction)
    return 0.0f;
  double mm = depth_m * 1000.0;
  if (spec.depth_noise_sigma_mm > 0.0)
    mm += rng.gauss() * spec.depth_noise_sigma_mm;
  return static_cast<float>(std::max(mm, 1.0));
}

std::vector<Annotation> project_annotations(const SceneSpec& spec,
                                            int frame_id) {
  const CameraIntrinsics& K = spec.camera;
  std::vector<Annotation> anns;
  for (const PersonSpec& person : spec.persons) {
    if (person.z_m <= 0.0) continue;
    double top = spec.floor_height_m - person.height_m;
    double left = person.x_m - person.width_m / 2.0;
    int side = static_cast<int>(
        round_half_away(K.fx * person.width_m / person.z_m));
    int x = static_cast<int>(round_half_away(K.cx + left * K.fx / person.z_m));
    int y = static_cast<int>(round_half_away(K.cy + top * K.fy / person.z_m));
    if (side < 1 || x < 0 || y < 0 || x + side > spec.width ||
        y + side > spec.height)
      continue;  // only fully visible upper bodies are annotated
    anns.push_back({frame_id, Box{x, y, side}, true});
  }
  return anns;
}

GroundPlane truth_plane(double floor_height_m, int floor_pixels) {
  GroundPlane plane;
  plane.normal = {0.0, 1.0, 0.0};
  plane.offset = -floor_height_m;
  plane.inlier_count = floor_pixels;
  plane.inlier_rms = 0.0;
  return plane;
}

double depth_ramp(const OracleNoise& n, double depth_m) {
  if (n.ramp_far_m <= n.ramp_near_m) return 0.0;
  return std::clamp((depth_m - n.ramp_near_m) / (n.ramp_far_m - n.ramp_near_m),
                    0.0, 1.0);
}

}  // namespace

RenderResult render(const SceneSpec& spec, int frame_id) {
  RenderResult res;
  res.depth = DepthImage(spec.width, spec.height);
  int floor_pixels = 0;

#pragma omp parallel for schedule(static) reduction(+ : floor_pixels)
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      Hit hit = trace_pixel(spec, u, v);
      std::size_t idx = static_cast<std::size_t>(v) * spec.width + u;
      res.depth.data[idx] = noisy_depth_mm(spec, hit.z, idx);
      if (hit.is_floor) ++floor_pixels;
    }

  res.annotations = project_annotations(spec, frame_id);
  res.plane = truth_plane(spec.floor_height_m, floor_pixels);
  return res;
}

namespace serial {

RenderResult render(const SceneSpec& spec, int frame_id) {
  RenderResult res;
  res.depth = DepthImage(spec.width, spec.height);
  int floor_pixels = 0;

  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      Hit hit = trace_pixel(spec, u, v);
      std::size_t idx = static_cast<std::size_t>(v) * spec.width + u;
      res.depth.data[idx] = noisy_depth_mm(spec, hit.z, idx);
      if (hit.is_floor) ++floor_pixels;
    }

  res.annotations = project_annotations(spec, frame_id);
  res.plane = truth_plane(spec.floor_height_m, floor_pixels);
  return res;
}

}  // namespace serial

OracleNoise color_noise_profile() {
  OracleNoise n;
  n.jitter_sigma = 0.18;
  n.flip_prob = 0.06;
  return n;
}

OracleNoise depth_noise_profile() {
  OracleNoise n;
  n.jitter_sigma = 0.03;
  n.flip_prob = 0.01;
  n.depth_extra_jitter = 0.22;
  n.depth_extra_flip = 0.15;
  n.iou_attenuation = 0.30;
  return n;
}

OracleScorer::OracleScorer(std::span<const Annotation> annotations,
                           const OracleNoise& noise, std::uint64_t seed)
    : noise_(noise), seed_(seed) {
  for (const Annotation& a : annotations)
    boxes_[a.frame].push_back(a.box);
}

double OracleScorer::score(int frame, const Proposal& p) const {
  double best = 0.0;
  if (auto it = boxes_.find(frame); it != boxes_.end())
    for (const Box& b : it->second) best = std::max(best, iou(p.box(), b));

  double g = depth_ramp(noise_, p.depth_m);
  double eff = best * (1.0 - noise_.iou_attenuation * g);
  double prob = logistic(noise_.logistic_k * (eff - noise_.logistic_mid));

  double sigma = noise_.jitter_sigma + noise_.depth_extra_jitter * g;
  double flip = noise_.flip_prob + noise_.depth_extra_flip * g;
  if (sigma > 0.0 || flip > 0.0) {
    std::uint64_t key = mix_seed(mix_seed(seed_, kScoreStream),
                                 static_cast<std::uint64_t>(frame));
    key = mix_seed(key, static_cast<std::uint64_t>(p.x) << 32 |
                            static_cast<std::uint32_t>(p.y));
    key = mix_seed(key, static_cast<std::uint64_t>(p.side));
    SplitMix64 rng(key);
    if (flip > 0.0 && rng.u01() < flip) prob = 1.0 - prob;  // label noise
    if (sigma > 0.0) prob += rng.gauss() * sigma;
  }
  return std::clamp(prob, 0.0, 1.0);
}

}  // namespace rgbd
