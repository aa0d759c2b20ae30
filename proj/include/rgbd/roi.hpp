#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rgbd/depth_image.hpp"
#include "rgbd/geometry.hpp"

namespace rgbd {

// Candidate upper-body window. depth_m is the depth of the anchor pixel the
// window was grown from.
struct Proposal {
  int x = 0;
  int y = 0;
  int side = 0;
  double depth_m = 0.0;

  Box box() const { return {x, y, side}; }
};

struct RoiConfig {
  double human_width_m = 0.6;        // W in the window-width rule fW/Z
  double vstd_threshold_m = 0.15;    // grid cells above this are not ground
  double plane_dist_threshold_m = 0.10;
  double valid_fraction_min = 1.0 / 3.0;
  int stride_px = 8;
  int min_side_px = 50;
  int ransac_iterations = 200;
  double ransac_tol_m = 0.05;
};

struct GridCellStats {
  int count = 0;
  double vstd = 0.0;  // standard deviation of point heights (y), meters
};

// 10x10 grid over the x-z footprint of the sampled ground candidates.
struct GridStats {
  double x_min = 0.0, x_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
  std::array<GridCellStats, 100> cells{};

  int cell_index(double x, double z) const;
};

// Back-projects valid lower-half pixels on the stride lattice, row-major.
std::vector<Point3> sample_lower_half(const DepthImage& img,
                                      const CameraIntrinsics& K, int stride);

GridStats compute_grid_stats(std::span<const Point3> points);

// GPD: sample the lower half, drop 10x10 grid cells whose vertical spread
// exceeds the threshold, RANSAC-fit the survivors. Absence of a plane is a
// value, not an error. stats_out, when given, receives the grid used.
std::optional<GroundPlane> detect_ground_plane(const DepthImage& img,
                                               const CameraIntrinsics& K,
                                               const RoiConfig& cfg,
                                               std::uint64_t seed,
                                               GridStats* stats_out = nullptr);

// Window width fW/Z rounded, floored at min_side. Rejects depth <= 0.
int window_width(double depth_m, const CameraIntrinsics& K,
                 const RoiConfig& cfg);

// SIS: one square window per valid stride-lattice pixel farther than
// plane_dist_threshold from the ground plane (every valid lattice pixel
// when plane is absent). Windows are centered on their anchor, shrunk to
// the image's smaller dimension when necessary, and translated fully in
// bounds. Output is in row-major anchor order.
std::vector<Proposal> generate_proposals(const DepthImage& img,
                                         const std::optional<GroundPlane>& plane,
                                         const CameraIntrinsics& K,
                                         const RoiConfig& cfg);

// CPF: keeps proposals whose valid-pixel fraction meets the threshold;
// preserves order.
std::vector<Proposal> filter_proposals(std::span<const Proposal> proposals,
                                       const ValidityIntegral& vi,
                                       const RoiConfig& cfg);

namespace serial {
std::optional<GroundPlane> detect_ground_plane(const DepthImage& img,
                                               const CameraIntrinsics& K,
                                               const RoiConfig& cfg,
                                               std::uint64_t seed,
                                               GridStats* stats_out = nullptr);
std::vector<Proposal> generate_proposals(const DepthImage& img,
                                         const std::optional<GroundPlane>& plane,
                                         const CameraIntrinsics& K,
                                         const RoiConfig& cfg);
// Reference filter counting valid pixels directly on the raster, no
// integral image.
std::vector<Proposal> filter_proposals(std::span<const Proposal> proposals,
                                       const DepthImage& img,
                                       const RoiConfig& cfg);
}

}  // namespace rgbd
