#include "rgbd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rgbd/io.hpp"
#include "rgbd/rng.hpp"

namespace rgbd {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr std::uint64_t kGpdStream = 0x69d0ull;

void parse_noise(const json& j, OracleNoise& n) {
  n.logistic_k = j.value("logistic_k", n.logistic_k);
  n.logistic_mid = j.value("logistic_mid", n.logistic_mid);
  n.jitter_sigma = j.value("jitter_sigma", n.jitter_sigma);
  n.flip_prob = j.value("flip_prob", n.flip_prob);
  n.depth_extra_jitter = j.value("depth_extra_jitter", n.depth_extra_jitter);
  n.depth_extra_flip = j.value("depth_extra_flip", n.depth_extra_flip);
  n.iou_attenuation = j.value("iou_attenuation", n.iou_attenuation);
  n.ramp_near_m = j.value("ramp_near_m", n.ramp_near_m);
  n.ramp_far_m = j.value("ramp_far_m", n.ramp_far_m);
}

ordered_json dump_noise(const OracleNoise& n) {
  ordered_json j;
  j["logistic_k"] = n.logistic_k;
  j["logistic_mid"] = n.logistic_mid;
  j["jitter_sigma"] = n.jitter_sigma;
  j["flip_prob"] = n.flip_prob;
  j["depth_extra_jitter"] = n.depth_extra_jitter;
  j["depth_extra_flip"] = n.depth_extra_flip;
  j["iou_attenuation"] = n.iou_attenuation;
  j["ramp_near_m"] = n.ramp_near_m;
  j["ramp_far_m"] = n.ramp_far_m;
  return j;
}

std::string scorer_spec_text(const ScorerSpec& s) {
  switch (s.kind) {
    case ScorerSpec::Kind::Oracle:
      return "oracle";
    case ScorerSpec::Kind::File:
      return "file:" + s.path;
    case ScorerSpec::Kind::Constant:
      break;
  }
  return "constant:" + io::format_double(s.constant_p);
}

void validate(const PipelineConfig& cfg) {
  if (cfg.intrinsics.fx <= 0.0 || cfg.intrinsics.fy <= 0.0)
    throw std::invalid_argument("config: focal lengths must be positive");
  if (cfg.roi.stride_px < 1 || cfg.roi.min_side_px < 1 ||
      cfg.roi.human_width_m <= 0.0 || cfg.roi.vstd_threshold_m <= 0.0 ||
      cfg.roi.plane_dist_threshold_m <= 0.0 || cfg.roi.ransac_iterations < 1 ||
      cfg.roi.ransac_tol_m <= 0.0)
    throw std::invalid_argument("config: roi parameters must be positive");
  if (cfg.roi.valid_fraction_min <= 0.0 || cfg.roi.valid_fraction_min > 1.0)
    throw std::invalid_argument("config: valid_fraction_min outside (0,1]");
  if (!(cfg.fusion.d_near_m > 0.0) ||
      !(cfg.fusion.d_far_m > cfg.fusion.d_near_m))
    throw std::invalid_argument("config: need 0 < d_near < d_far");
  if (cfg.nms.iou_threshold < 0.0 || cfg.nms.iou_threshold > 1.0 ||
      cfg.nms.score_min < 0.0 || cfg.nms.score_min > 1.0)
    throw std::invalid_argument("config: nms parameters outside [0,1]");
  if (cfg.fill.kernel_radius < 1)
    throw std::invalid_argument("config: fill kernel_radius must be >= 1");
  if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

}  // namespace

ScorerSpec parse_scorer_spec(const std::string& text) {
  ScorerSpec spec;
  if (text == "oracle") {
    spec.kind = ScorerSpec::Kind::Oracle;
    return spec;
  }
  if (text.starts_with("file:")) {
    spec.kind = ScorerSpec::Kind::File;
    spec.path = text.substr(5);
    if (spec.path.empty())
      throw std::invalid_argument("scorer spec: empty file path");
    return spec;
  }
  if (text.starts_with("constant:")) {
    spec.kind = ScorerSpec::Kind::Constant;
    std::size_t pos = 0;
    spec.constant_p = std::stod(text.substr(9), &pos);
    if (pos != text.size() - 9 || spec.constant_p < 0.0 ||
        spec.constant_p > 1.0)
      throw std::invalid_argument("scorer spec: constant outside [0,1]");
    return spec;
  }
  throw std::invalid_argument(
      "scorer spec must be oracle | file:PATH | constant:P, got: " + text);
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument("invalid JSON in config: " + path);

  PipelineConfig cfg;
  if (j.contains("intrinsics")) {
    if (j["intrinsics"].is_string()) {
      cfg.intrinsics = io::read_intrinsics(j["intrinsics"].get<std::string>());
    } else {
      const json& k = j["intrinsics"];
      cfg.intrinsics.fx = k.value("fx", cfg.intrinsics.fx);
      cfg.intrinsics.fy = k.value("fy", cfg.intrinsics.fy);
      cfg.intrinsics.cx = k.value("cx", cfg.intrinsics.cx);
      cfg.intrinsics.cy = k.value("cy", cfg.intrinsics.cy);
    }
  }
  if (j.contains("encoding")) {
    auto scheme = parse_scheme(j["encoding"].get<std::string>());
    if (!scheme)
      throw std::invalid_argument("config: unknown encoding scheme");
    cfg.scheme = *scheme;
  }
  if (j.contains("fill")) {
    cfg.fill.kernel_radius =
        j["fill"].value("kernel_radius", cfg.fill.kernel_radius);
    cfg.fill.max_passes = j["fill"].value("max_passes", cfg.fill.max_passes);
  }
  if (j.contains("normalize")) {
    const json& n = j["normalize"];
    if (n.contains("fixed_range_mm") && !n["fixed_range_mm"].is_null()) {
      cfg.norm.fixed = true;
      cfg.norm.min_mm = n["fixed_range_mm"][0].get<float>();
      cfg.norm.max_mm = n["fixed_range_mm"][1].get<float>();
    }
  }
  if (j.contains("roi")) {
    const json& r = j["roi"];
    cfg.roi.human_width_m = r.value("human_width_m", cfg.roi.human_width_m);
    cfg.roi.vstd_threshold_m =
        r.value("vstd_threshold_m", cfg.roi.vstd_threshold_m);
    cfg.roi.plane_dist_threshold_m =
        r.value("plane_dist_threshold_m", cfg.roi.plane_dist_threshold_m);
    cfg.roi.valid_fraction_min =
        r.value("valid_fraction_min", cfg.roi.valid_fraction_min);
    cfg.roi.stride_px = r.value("stride_px", cfg.roi.stride_px);
    cfg.roi.min_side_px = r.value("min_side_px", cfg.roi.min_side_px);
    cfg.roi.ransac_iterations =
        r.value("ransac_iterations", cfg.roi.ransac_iterations);
    cfg.roi.ransac_tol_m = r.value("ransac_tol_m", cfg.roi.ransac_tol_m);
  }
  if (j.contains("fusion")) {
    cfg.fusion.d_near_m = j["fusion"].value("d_near_m", cfg.fusion.d_near_m);
    cfg.fusion.d_far_m = j["fusion"].value("d_far_m", cfg.fusion.d_far_m);
  }
  if (j.contains("nms")) {
    cfg.nms.iou_threshold =
        j["nms"].value("iou_threshold", cfg.nms.iou_threshold);
    cfg.nms.score_min = j["nms"].value("score_min", cfg.nms.score_min);
  }
  if (j.contains("scorers")) {
    const json& s = j["scorers"];
    if (s.contains("color"))
      cfg.color_scorer = parse_scorer_spec(s["color"].get<std::string>());
    if (s.contains("depth"))
      cfg.depth_scorer = parse_scorer_spec(s["depth"].get<std::string>());
    if (s.contains("annotations"))
      cfg.annotations_path = s["annotations"].get<std::string>();
    if (s.contains("color_noise")) parse_noise(s["color_noise"], cfg.color_noise);
    if (s.contains("depth_noise")) parse_noise(s["depth_noise"], cfg.depth_noise);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  validate(cfg);
  return cfg;
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["intrinsics"] = {{"fx", cfg.intrinsics.fx},
                     {"fy", cfg.intrinsics.fy},
                     {"cx", cfg.intrinsics.cx},
                     {"cy", cfg.intrinsics.cy}};
  j["encoding"] = std::string(scheme_name(cfg.scheme));
  j["fill"] = {{"kernel_radius", cfg.fill.kernel_radius},
               {"max_passes", cfg.fill.max_passes}};
  if (cfg.norm.fixed)
    j["normalize"] = {{"fixed_range_mm", {cfg.norm.min_mm, cfg.norm.max_mm}}};
  else
    j["normalize"] = {{"fixed_range_mm", nullptr}};
  j["roi"] = {{"human_width_m", cfg.roi.human_width_m},
              {"vstd_threshold_m", cfg.roi.vstd_threshold_m},
              {"plane_dist_threshold_m", cfg.roi.plane_dist_threshold_m},
              {"valid_fraction_min", cfg.roi.valid_fraction_min},
              {"stride_px", cfg.roi.stride_px},
              {"min_side_px", cfg.roi.min_side_px},
              {"ransac_iterations", cfg.roi.ransac_iterations},
              {"ransac_tol_m", cfg.roi.ransac_tol_m}};
  j["fusion"] = {{"d_near_m", cfg.fusion.d_near_m},
                 {"d_far_m", cfg.fusion.d_far_m}};
  j["nms"] = {{"iou_threshold", cfg.nms.iou_threshold},
              {"score_min", cfg.nms.score_min}};
  ordered_json s;
  s["color"] = scorer_spec_text(cfg.color_scorer);
  s["depth"] = scorer_spec_text(cfg.depth_scorer);
  s["annotations"] = cfg.annotations_path;
  s["color_noise"] = dump_noise(cfg.color_noise);
  s["depth_noise"] = dump_noise(cfg.depth_noise);
  j["scorers"] = s;
  return j.dump(2);
}

std::uint64_t frame_gpd_seed(std::uint64_t seed, int frame) {
  return mix_seed(seed, mix_seed(kGpdStream, static_cast<std::uint64_t>(frame)));
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec,
                                    const OracleNoise& noise,
                                    std::span<const Annotation> annotations,
                                    std::uint64_t seed, std::uint64_t salt) {
  switch (spec.kind) {
    case ScorerSpec::Kind::Constant:
      return std::make_unique<ConstantScorer>(spec.constant_p);
    case ScorerSpec::Kind::File:
      return std::make_unique<FileScorer>(FileScorer::load(spec.path));
    case ScorerSpec::Kind::Oracle:
      return std::make_unique<OracleScorer>(annotations, noise,
                                            mix_seed(seed, salt));
  }
  throw std::logic_error("unreachable scorer kind");
}

FrameOutput detect_frame(const DepthImage& raw, int frame_id,
                         const PipelineConfig& cfg, const Scorer& color,
                         const Scorer& depth, const DetectOptions& opts) {
  const bool par = opts.impl == KernelImpl::Parallel;
  FrameOutput out;
  out.frame = frame_id;

  auto t = Clock::now();
  DepthImage filled = par ? fill_holes(raw, cfg.fill.kernel_radius,
                                       cfg.fill.max_passes)
                          : serial::fill_holes(raw, cfg.fill.kernel_radius,
                                               cfg.fill.max_passes);
  out.times.fill_ms = ms_since(t);

  if (opts.want_encoded) {
    t = Clock::now();
    GrayImage gray = cfg.norm.fixed
                         ? normalize_fixed(filled, cfg.norm.min_mm,
                                           cfg.norm.max_mm)
                         : (par ? normalize(filled) : serial::normalize(filled));
    auto mask = validity_mask(filled);
    out.encoded = par ? encode_gray(gray, mask, cfg.scheme)
                      : serial::encode_gray(gray, mask, cfg.scheme);
    out.times.encode_ms = ms_since(t);
  }

  // ROI selection runs on the raw raster: CPF exists to reject windows over
  // the sensor's invalid regions, which filling would paper over.
  std::uint64_t gpd_seed = frame_gpd_seed(cfg.seed, frame_id);
  t = Clock::now();
  out.plane = par ? detect_ground_plane(raw, cfg.intrinsics, cfg.roi, gpd_seed)
                  : serial::detect_ground_plane(raw, cfg.intrinsics, cfg.roi,
                                                gpd_seed);
  out.times.gpd_ms = ms_since(t);

  t = Clock::now();
  std::vector<Proposal> proposals =
      par ? generate_proposals(raw, out.plane, cfg.intrinsics, cfg.roi)
          : serial::generate_proposals(raw, out.plane, cfg.intrinsics,
                                       cfg.roi);
  out.times.sis_ms = ms_since(t);
  out.proposals_sis = proposals.size();

  t = Clock::now();
  if (par) {
    ValidityIntegral vi = build_validity_integral(raw);
    proposals = filter_proposals(proposals, vi, cfg.roi);
  } else {
    proposals = serial::filter_proposals(proposals, raw, cfg.roi);
  }
  out.times.cpf_ms = ms_since(t);
  out.proposals_kept = proposals.size();

  t = Clock::now();
  std::vector<ScoredProposal> scored =
      par ? score_frame(frame_id, proposals, color, depth, cfg.fusion)
          : serial::score_frame(frame_id, proposals, color, depth, cfg.fusion);
  out.times.score_ms = ms_since(t);

  t = Clock::now();
  out.detections = nms(std::move(scored), cfg.nms);
  out.times.nms_ms = ms_since(t);
  return out;
}

std::vector<BenchRow> run_bench(std::span<const DepthImage> frames,
                                const PipelineConfig& cfg,
                                const Scorer& color, const Scorer& depth,
                                int repeat) {
  if (frames.empty()) throw std::invalid_argument("bench: no frames");
  repeat = std::max(repeat, 1);

  struct Samples {
    std::vector<double> fill, encode, gpd, sis, cpf, score, nms, roi;
    std::vector<double> sis_count, kept_count;
  };
  Samples per_impl[2];

  for (int rep = 0; rep < repeat; ++rep) {
    for (std::size_t f = 0; f < frames.size(); ++f) {
      for (int impl = 0; impl < 2; ++impl) {
        DetectOptions opts;
        opts.want_encoded = true;
        opts.impl = impl == 0 ? KernelImpl::Serial : KernelImpl::Parallel;
        FrameOutput out = detect_frame(frames[f], static_cast<int>(f), cfg,
                                       color, depth, opts);
        Samples& s = per_impl[impl];
        s.fill.push_back(out.times.fill_ms);
        s.encode.push_back(out.times.encode_ms);
        s.gpd.push_back(out.times.gpd_ms);
        s.sis.push_back(out.times.sis_ms);
        s.cpf.push_back(out.times.cpf_ms);
        s.score.push_back(out.times.score_ms);
        s.nms.push_back(out.times.nms_ms);
        s.roi.push_back(out.times.roi_ms());
        s.sis_count.push_back(static_cast<double>(out.proposals_sis));
        s.kept_count.push_back(static_cast<double>(out.proposals_kept));
      }
    }
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  };

  std::vector<BenchRow> rows;
  const char* impl_name[2] = {"serial", "parallel"};
  for (int impl = 0; impl < 2; ++impl) {
    Samples& s = per_impl[impl];
    rows.push_back({"fill_ms", impl_name[impl], median(s.fill)});
    rows.push_back({"encode_ms", impl_name[impl], median(s.encode)});
    rows.push_back({"gpd_ms", impl_name[impl], median(s.gpd)});
    rows.push_back({"sis_ms", impl_name[impl], median(s.sis)});
    rows.push_back({"cpf_ms", impl_name[impl], median(s.cpf)});
    rows.push_back({"fusion_ms", impl_name[impl], median(s.score)});
    rows.push_back({"nms_ms", impl_name[impl], median(s.nms)});
    rows.push_back({"roi_total_ms", impl_name[impl], median(s.roi)});
  }
  rows.push_back({"proposals_sis", "", median(per_impl[1].sis_count)});
  rows.push_back({"proposals_kept", "", median(per_impl[1].kept_count)});
  rows.push_back({"frames", "", static_cast<double>(frames.size())});
  return rows;
}

}  // namespace rgbd
