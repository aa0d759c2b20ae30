#include "rgbd/roi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rgbd {

namespace {

int bucket(double v, double lo, double hi) {
  double extent = hi - lo;
  if (extent <= 0.0) return 0;
  int b = static_cast<int>((v - lo) / extent * 10.0);
  return std::clamp(b, 0, 9);
}

// Square window of the given side, centered on the anchor pixel, shrunk to
// the image's smaller dimension when oversized and translated fully in
// bounds. Keeps windows square at image borders.
Proposal make_window(int u, int v, int side, double depth_m, int width,
                     int height) {
  side = std::min({side, width, height});
  int x = std::clamp(u - side / 2, 0, width - side);
  int y = std::clamp(v - side / 2, 0, height - side);
  return {x, y, side, depth_m};
}

std::vector<Point3> filtered_ground_points(std::span<const Point3> pts,
                                           const GridStats& grid,
                                           double vstd_threshold) {
  std::vector<Point3> kept;
  kept.reserve(pts.size());
  for (const Point3& p : pts)
    if (grid.cells[grid.cell_index(p.x, p.z)].vstd <= vstd_threshold)
      kept.push_back(p);
  return kept;
}

bool anchor_passes(const DepthImage& img, int u, int v,
                   const std::optional<GroundPlane>& plane,
                   const CameraIntrinsics& K, double plane_dist_threshold) {
  float d = img.at(u, v);
  if (d <= 0.0f) return false;
  if (!plane) return true;
  Point3 p = back_project(u, v, d, K);
  return plane_distance(p, *plane) > plane_dist_threshold;
}

}  // namespace

int GridStats::cell_index(double x, double z) const {
  return bucket(z, z_min, z_max) * 10 + bucket(x, x_min, x_max);
}

std::vector<Point3> sample_lower_half(const DepthImage& img,
                                      const CameraIntrinsics& K, int stride) {
  if (stride < 1) throw std::invalid_argument("sample_lower_half: stride < 1");
  std::vector<Point3> pts;
  for (int v = img.height / 2; v < img.height; v += stride)
    for (int u = 0; u < img.width; u += stride) {
      float d = img.at(u, v);
      if (d > 0.0f) pts.push_back(back_project(u, v, d, K));
    }
  return pts;
}

GridStats compute_grid_stats(std::span<const Point3> points) {
  GridStats gs;
  if (points.empty()) return gs;

  gs.x_min = gs.x_max = points[0].x;
  gs.z_min = gs.z_max = points[0].z;
  for (const Point3& p : points) {
    gs.x_min = std::min(gs.x_min, p.x);
    gs.x_max = std::max(gs.x_max, p.x);
    gs.z_min = std::min(gs.z_min, p.z);
    gs.z_max = std::max(gs.z_max, p.z);
  }

  double sum[100] = {0};
  for (const Point3& p : points) {
    auto& cell = gs.cells[gs.cell_index(p.x, p.z)];
    ++cell.count;
    sum[gs.cell_index(p.x, p.z)] += p.y;
  }
  double mean[100];
  for (int i = 0; i < 100; ++i)
    mean[i] = gs.cells[i].count > 0 ? sum[i] / gs.cells[i].count : 0.0;

  double sq[100] = {0};
  for (const Point3& p : points) {
    int i = gs.cell_index(p.x, p.z);
    double d = p.y - mean[i];
    sq[i] += d * d;
  }
  for (int i = 0; i < 100; ++i)
    if (gs.cells[i].count > 0)
      gs.cells[i].vstd = std::sqrt(sq[i] / gs.cells[i].count);
  return gs;
}

std::optional<GroundPlane> detect_ground_plane(const DepthImage& img,
                                               const CameraIntrinsics& K,
                                               const RoiConfig& cfg,
                                               std::uint64_t seed,
                                               GridStats* stats_out) {
  std::vector<Point3> pts = sample_lower_half(img, K, cfg.stride_px);
  GridStats grid = compute_grid_stats(pts);
  if (stats_out) *stats_out = grid;
  if (pts.size() < 3) return std::nullopt;

  std::vector<Point3> ground =
      filtered_ground_points(pts, grid, cfg.vstd_threshold_m);
  if (ground.size() < 3) return std::nullopt;
  return fit_plane_ransac(ground, cfg.ransac_iterations, cfg.ransac_tol_m,
                          seed);
}

int window_width(double depth_m, const CameraIntrinsics& K,
                 const RoiConfig& cfg) {
  if (!(depth_m > 0.0))
    throw std::invalid_argument("window_width: depth must be positive");
  long w = round_half_away(K.fx * cfg.human_width_m / depth_m);
  return static_cast<int>(std::max<long>(w, cfg.min_side_px));
}

std::vector<Proposal> generate_proposals(const DepthImage& img,
                                         const std::optional<GroundPlane>& plane,
                                         const CameraIntrinsics& K,
                                         const RoiConfig& cfg) {
  int stride = cfg.stride_px;
  int rows = (img.height + stride - 1) / stride;
  std::vector<std::vector<Proposal>> per_row(rows);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    int v = r * stride;
    auto& row = per_row[r];
    for (int u = 0; u < img.width; u += stride) {
      if (!anchor_passes(img, u, v, plane, K, cfg.plane_dist_threshold_m))
        continue;
      double z = img.at(u, v) / 1000.0;
      row.push_back(
          make_window(u, v, window_width(z, K, cfg), z, img.width, img.height));
    }
  }

  std::vector<Proposal> out;
  for (auto& row : per_row)
    out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<Proposal> filter_proposals(std::span<const Proposal> proposals,
                                       const ValidityIntegral& vi,
                                       const RoiConfig& cfg) {
  std::vector<char> keep(proposals.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    Box b = proposals[i].box();
    long area = vi.clipped_area(b);
    keep[i] = area > 0 && static_cast<double>(vi.count(b)) /
                                  static_cast<double>(area) >=
                              cfg.valid_fraction_min;
  }

  std::vector<Proposal> out;
  out.reserve(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i)
    if (keep[i]) out.push_back(proposals[i]);
  return out;
}

namespace serial {

std::optional<GroundPlane> detect_ground_plane(const DepthImage& img,
                                               const CameraIntrinsics& K,
                                               const RoiConfig& cfg,
                                               std::uint64_t seed,
                                               GridStats* stats_out) {
  std::vector<Point3> pts = sample_lower_half(img, K, cfg.stride_px);
  GridStats grid = compute_grid_stats(pts);
  if (stats_out) *stats_out = grid;
  if (pts.size() < 3) return std::nullopt;

  std::vector<Point3> ground =
      filtered_ground_points(pts, grid, cfg.vstd_threshold_m);
  if (ground.size() < 3) return std::nullopt;
  return serial::fit_plane_ransac(ground, cfg.ransac_iterations,
                                  cfg.ransac_tol_m, seed);
}

std::vector<Proposal> generate_proposals(const DepthImage& img,
                                         const std::optional<GroundPlane>& plane,
                                         const CameraIntrinsics& K,
                                         const RoiConfig& cfg) {
  std::vector<Proposal> out;
  for (int v = 0; v < img.height; v += cfg.stride_px)
    for (int u = 0; u < img.width; u += cfg.stride_px) {
      if (!anchor_passes(img, u, v, plane, K, cfg.plane_dist_threshold_m))
        continue;
      double z = img.at(u, v) / 1000.0;
      out.push_back(
          make_window(u, v, window_width(z, K, cfg), z, img.width, img.height));
    }
  return out;
}

std::vector<Proposal> filter_proposals(std::span<const Proposal> proposals,
                                       const DepthImage& img,
                                       const RoiConfig& cfg) {
  std::vector<Proposal> out;
  for (const Proposal& p : proposals) {
    long valid = 0, area = 0;
    int x0 = std::max(0, p.x), x1 = std::min(img.width, p.x + p.side);
    int y0 = std::max(0, p.y), y1 = std::min(img.height, p.y + p.side);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        ++area;
        if (img.at(x, y) > 0.0f) ++valid;
      }
    if (area > 0 &&
        static_cast<double>(valid) / static_cast<double>(area) >=
            cfg.valid_fraction_min)
      out.push_back(p);
  }
  return out;
}

}  // namespace serial

}  // namespace rgbd
