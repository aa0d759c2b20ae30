#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rgbd/depth_image.hpp"
#include "rgbd/encoding.hpp"
#include "rgbd/eval.hpp"
#include "rgbd/fusion.hpp"
#include "rgbd/geometry.hpp"
#include "rgbd/roi.hpp"
#include "rgbd/synth.hpp"

namespace rgbd {

struct FillParams {
  int kernel_radius = 2;
  int max_passes = 3;
};

struct NormalizeParams {
  bool fixed = false;  // false: per-frame min-max
  float min_mm = 500.0f;
  float max_mm = 10000.0f;
};

struct ScorerSpec {
  enum class Kind { Constant, File, Oracle };
  Kind kind = Kind::Constant;
  double constant_p = 0.5;
  std::string path;  // for Kind::File
};

// Parses "constant:P" | "file:PATH" | "oracle"; throws on anything else.
ScorerSpec parse_scorer_spec(const std::string& text);

struct PipelineConfig {
  CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5};
  EncodingScheme scheme = EncodingScheme::CECD;
  FillParams fill;
  NormalizeParams norm;
  RoiConfig roi;
  FusionWeightParams fusion;
  NmsParams nms;
  ScorerSpec color_scorer;
  ScorerSpec depth_scorer;
  OracleNoise color_noise = color_noise_profile();
  OracleNoise depth_noise = depth_noise_profile();
  std::string annotations_path;  // ground truth for oracle scorers
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Reads a JSON config file; keys missing from the file keep their defaults.
PipelineConfig load_pipeline_config(const std::string& path);
std::string dump_pipeline_config(const PipelineConfig& cfg);

// Per-frame RANSAC seed; shared by `detect` and `rois` so both produce the
// same plane (and therefore the same proposals) for a given config.
std::uint64_t frame_gpd_seed(std::uint64_t seed, int frame);

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec,
                                    const OracleNoise& noise,
                                    std::span<const Annotation> annotations,
                                    std::uint64_t seed, std::uint64_t salt);

struct StageTimes {
  double fill_ms = 0.0;
  double encode_ms = 0.0;
  double gpd_ms = 0.0;
  double sis_ms = 0.0;
  double cpf_ms = 0.0;
  double score_ms = 0.0;  // scoring + fusion
  double nms_ms = 0.0;

  double roi_ms() const { return gpd_ms + sis_ms + cpf_ms; }
};

// Which kernel implementations a run uses; Serial is the reference path the
// benchmark compares against.
enum class KernelImpl { Parallel, Serial };

struct FrameOutput {
  int frame = 0;
  std::vector<ScoredProposal> detections;  // post-NMS, descending score
  std::optional<GroundPlane> plane;
  std::size_t proposals_sis = 0;
  std::size_t proposals_kept = 0;
  StageTimes times;
  RgbImage encoded;  // populated only when requested
};

struct DetectOptions {
  bool want_encoded = false;
  KernelImpl impl = KernelImpl::Parallel;
};

// One frame through the full pipeline: fill -> encode (for the record) ->
// GPD -> SIS -> CPF -> score/fuse -> NMS. ROI selection runs on the raw
// (unfilled) raster; encoding on the filled one.
FrameOutput detect_frame(const DepthImage& raw, int frame_id,
                         const PipelineConfig& cfg, const Scorer& color,
                         const Scorer& depth, const DetectOptions& opts = {});

struct BenchRow {
  std::string name;
  std::string impl;  // "serial", "parallel", or "" for counts
  double value = 0.0;
};

// Per-stage median wall times for both kernel implementations plus
// proposal counts over the sequence.
std::vector<BenchRow> run_bench(std::span<const DepthImage> frames,
                                const PipelineConfig& cfg,
                                const Scorer& color, const Scorer& depth,
                                int repeat = 1);

}  // namespace rgbd
