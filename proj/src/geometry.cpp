#include "rgbd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rgbd/rng.hpp"

namespace rgbd {

namespace {

Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

Point3 sub(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

Point3 scaled(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }

// Canonical sign: first nonzero component among (y, z, x) positive.
void canonicalize(Point3& n, double& d) {
  bool flip = n.y < 0.0 ||
              (n.y == 0.0 && (n.z < 0.0 || (n.z == 0.0 && n.x < 0.0)));
  if (flip) {
    n = scaled(n, -1.0);
    d = -d;
  }
}

struct Candidate {
  Point3 normal{};
  double offset = 0.0;
  int count = -1;  // -1 marks a degenerate (collinear) draw
  int iter = 0;
};

// Exact plane through three sampled points plus its inlier count. The
// per-iteration RNG stream makes the result independent of thread count.
Candidate evaluate_hypothesis(std::span<const Point3> pts, std::uint64_t seed,
                              int iter, double tol) {
  Candidate c;
  c.iter = iter;
  SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(iter)));
  auto n = static_cast<std::uint32_t>(pts.size());
  std::uint32_t i = rng.below(n);
  std::uint32_t j, k;
  do {
    j = rng.below(n);
  } while (j == i);
  do {
    k = rng.below(n);
  } while (k == i || k == j);

  Point3 nrm = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
  double len = std::sqrt(dot(nrm, nrm));
  if (len < 1e-12) return c;
  nrm = scaled(nrm, 1.0 / len);
  double off = -dot(nrm, pts[i]);

  int count = 0;
  for (const Point3& p : pts)
    if (std::fabs(dot(nrm, p) + off) <= tol) ++count;
  c.normal = nrm;
  c.offset = off;
  c.count = count;
  return c;
}

bool better(const Candidate& a, const Candidate& b) {
  return a.count > b.count || (a.count == b.count && a.iter < b.iter);
}

// Smallest-eigenvalue unit eigenvector of a symmetric 3x3 matrix: analytic
// eigenvalues, then the strongest cross product of rows of (M - lambda I).
Point3 smallest_eigenvector(const double m[3][3], const Point3& fallback) {
  double p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
  double eig;
  if (p1 == 0.0) {
    eig = std::min({m[0][0], m[1][1], m[2][2]});
  } else {
    double q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    double p2 = (m[0][0] - q) * (m[0][0] - q) +
                (m[1][1] - q) * (m[1][1] - q) +
                (m[2][2] - q) * (m[2][2] - q) + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    double b[3][3];
    for (int r = 0; r < 3; ++r)
      for (int ccol = 0; ccol < 3; ++ccol)
        b[r][ccol] = (m[r][ccol] - (r == ccol ? q : 0.0)) / p;
    double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                  b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                  b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    double r = std::clamp(detb / 2.0, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    eig = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  }

  Point3 r0{m[0][0] - eig, m[0][1], m[0][2]};
  Point3 r1{m[0][1], m[1][1] - eig, m[1][2]};
  Point3 r2{m[0][2], m[1][2], m[2][2] - eig};
  Point3 c0 = cross(r0, r1);
  Point3 c1 = cross(r0, r2);
  Point3 c2 = cross(r1, r2);
  double n0 = dot(c0, c0), n1 = dot(c1, c1), n2 = dot(c2, c2);
  Point3 best = c0;
  double bn = n0;
  if (n1 > bn) {
    best = c1;
    bn = n1;
  }
  if (n2 > bn) {
    best = c2;
    bn = n2;
  }
  if (bn < 1e-40) return fallback;  // near-repeated eigenvalue
  return scaled(best, 1.0 / std::sqrt(bn));
}

GroundPlane refit_on_inliers(std::span<const Point3> pts,
                             const Candidate& win, double tol) {
  std::vector<std::size_t> idx;
  idx.reserve(static_cast<std::size_t>(win.count));
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::fabs(dot(win.normal, pts[i]) + win.offset) <= tol)
      idx.push_back(i);

  Point3 c{0.0, 0.0, 0.0};
  for (std::size_t i : idx) {
    c.x += pts[i].x;
    c.y += pts[i].y;
    c.z += pts[i].z;
  }
  double inv = 1.0 / static_cast<double>(idx.size());
  c = scaled(c, inv);

  double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (std::size_t i : idx) {
    Point3 d = sub(pts[i], c);
    cov[0][0] += d.x * d.x;
    cov[0][1] += d.x * d.y;
    cov[0][2] += d.x * d.z;
    cov[1][1] += d.y * d.y;
    cov[1][2] += d.y * d.z;
    cov[2][2] += d.z * d.z;
  }
  cov[1][0] = cov[0][1];
  cov[2][0] = cov[0][2];
  cov[2][1] = cov[1][2];

  Point3 n = smallest_eigenvector(cov, win.normal);
  double off = -dot(n, c);
  canonicalize(n, off);

  double sq = 0.0;
  for (std::size_t i : idx) {
    double d = dot(n, pts[i]) + off;
    sq += d * d;
  }
  GroundPlane plane;
  plane.normal = n;
  plane.offset = off;
  plane.inlier_count = static_cast<int>(idx.size());
  plane.inlier_rms = std::sqrt(sq * inv);
  return plane;
}

}  // namespace

Point3 back_project(double u, double v, double depth_mm,
                    const CameraIntrinsics& K) {
  if (!(depth_mm > 0.0))
    throw std::invalid_argument("back_project: depth must be positive");
  double z = depth_mm / 1000.0;
  return {(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z};
}

double plane_distance(const Point3& p, const GroundPlane& plane) {
  return std::fabs(dot(plane.normal, p) + plane.offset);
}

std::optional<GroundPlane> fit_plane_ransac(std::span<const Point3> points,
                                            int iterations,
                                            double inlier_tol_m,
                                            std::uint64_t seed) {
  if (points.size() < 3 || iterations < 1) return std::nullopt;

  Candidate best;
#pragma omp parallel
  {
    Candidate local;
#pragma omp for nowait
    for (int it = 0; it < iterations; ++it) {
      Candidate c = evaluate_hypothesis(points, seed, it, inlier_tol_m);
      if (c.count >= 0 && (local.count < 0 || better(c, local))) local = c;
    }
#pragma omp critical
    {
      if (local.count >= 0 && (best.count < 0 || better(local, best)))
        best = local;
    }
  }
  if (best.count < 3) return std::nullopt;
  return refit_on_inliers(points, best, inlier_tol_m);
}

namespace serial {

std::optional<GroundPlane> fit_plane_ransac(std::span<const Point3> points,
                                            int iterations,
                                            double inlier_tol_m,
                                            std::uint64_t seed) {
  if (points.size() < 3 || iterations < 1) return std::nullopt;

  Candidate best;
  for (int it = 0; it < iterations; ++it) {
    Candidate c = evaluate_hypothesis(points, seed, it, inlier_tol_m);
    if (c.count >= 0 && (best.count < 0 || better(c, best))) best = c;
  }
  if (best.count < 3) return std::nullopt;
  return refit_on_inliers(points, best, inlier_tol_m);
}

}  // namespace serial

}  // namespace rgbd
