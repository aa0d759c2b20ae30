#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgbd/depth_image.hpp"
#include "rgbd/encoding.hpp"
#include "rgbd/eval.hpp"
#include "rgbd/geometry.hpp"
#include "rgbd/roi.hpp"
#include "rgbd/synth.hpp"

namespace rgbd::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Depth rasters travel as 16-bit binary PGM (P5, millimeters, 0 = invalid);
// masks as 8-bit PGM; encoded frames as binary PPM (P6).
DepthImage read_depth_pgm(const std::string& path);
void write_depth_pgm(const std::string& path, const DepthImage& img);
GrayImage read_gray_pgm(const std::string& path);
void write_gray_pgm(const std::string& path, const GrayImage& img);
void write_ppm(const std::string& path, const RgbImage& img);

// JSON object {"fx":..,"fy":..,"cx":..,"cy":..} in pixels.
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);

SceneSpec read_scene_spec(const std::string& path);

// JSON lines {"x":..,"y":..,"side":..,"depth_m":..}; a frame tag is
// prepended when given (multi-frame files).
void write_proposals_jsonl(std::ostream& os, std::span<const Proposal> props,
                           std::optional<int> frame = {});
std::vector<Proposal> read_proposals_jsonl(const std::string& path);

struct DetectionRecord {
  int frame = 0;
  Box box;
  double p_color = 0.0;
  double p_depth = 0.0;
  double p_fused = 0.0;
};

void write_detections_jsonl(std::ostream& os,
                            std::span<const DetectionRecord> recs);
std::vector<DetectionRecord> read_detections_jsonl(const std::string& path);

void write_annotations_jsonl(const std::string& path,
                             std::span<const Annotation> anns);
std::vector<Annotation> read_annotations_jsonl(const std::string& path);

void write_pr_csv(std::ostream& os, std::span<const PrPoint> curve);
// Two-column recall/precision file, gnuplot-friendly.
void write_pr_curve(std::ostream& os, std::span<const PrPoint> curve);

// Shortest round-trip decimal representation (used by all text writers so
// identical runs produce identical bytes).
std::string format_double(double v);

}  // namespace rgbd::io
