#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace rgbd {

struct CameraIntrinsics {
  double fx = 0.0;  // focal lengths in pixels
  double fy = 0.0;
  double cx = 0.0;  // principal point in pixels
  double cy = 0.0;
};

// Camera frame: x right, y down, z forward. Units are meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Plane normal·p + offset = 0 with unit normal. The sign is canonical: the
// first nonzero component among (y, z, x) is positive, so a floor in the
// y-down camera frame always comes out with normal.y > 0.
struct GroundPlane {
  Point3 normal;
  double offset = 0.0;
  int inlier_count = 0;
  double inlier_rms = 0.0;  // meters, against the refit plane
};

// Pinhole back-projection of a depth pixel into the camera frame.
// depth_mm must be positive (0 marks an invalid pixel and is rejected).
Point3 back_project(double u, double v, double depth_mm,
                    const CameraIntrinsics& K);

double plane_distance(const Point3& p, const GroundPlane& plane);

// Random 3-point plane hypotheses scored by inlier count, followed by an
// orthogonal least-squares refit on the winning inlier set. Deterministic
// for a given seed regardless of thread count. Returns nullopt when the
// input is degenerate (fewer than 3 points, or every sampled triple
// collinear).
std::optional<GroundPlane> fit_plane_ransac(std::span<const Point3> points,
                                            int iterations,
                                            double inlier_tol_m,
                                            std::uint64_t seed);

namespace serial {
std::optional<GroundPlane> fit_plane_ransac(std::span<const Point3> points,
                                            int iterations,
                                            double inlier_tol_m,
                                            std::uint64_t seed);
}

}  // namespace rgbd
