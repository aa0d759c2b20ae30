// rgbdet: depth-driven human-detection pipeline CLI.
//
// Subcommands: synth, encode, rois, detect, eval, bench. Depth frames are
// 16-bit PGM files named by zero-padded frame number; proposals, scores,
// detections and annotations are JSON lines; PR curves and bench reports
// are CSV. stdout carries only data, diagnostics go to stderr.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgbd/io.hpp"
#include "rgbd/pipeline.hpp"
#include "rgbd/rng.hpp"

namespace fs = std::filesystem;
using namespace rgbd;

namespace {

struct FrameFile {
  int id = 0;
  std::string path;
};

std::vector<FrameFile> list_frames(const std::string& dir) {
  std::vector<FrameFile> frames;
  if (!fs::is_directory(dir))
    throw io::IoError(dir + ": not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (!name.ends_with(".pgm")) continue;
    std::string stem = name.substr(0, name.size() - 4);
    if (stem.empty() ||
        stem.find_first_not_of("0123456789") != std::string::npos)
      continue;
    frames.push_back({std::stoi(stem), entry.path().string()});
  }
  std::sort(frames.begin(), frames.end(),
            [](const FrameFile& a, const FrameFile& b) { return a.id < b.id; });
  if (frames.empty()) throw io::IoError(dir + ": no numbered .pgm frames");
  return frames;
}

std::string frame_name(int id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.%s", id, ext);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io::IoError(path + ": cannot open for writing");
  return out;
}

// Common knobs shared by detect/bench/rois; CLI flags override config-file
// values, which override built-in defaults.
struct ConfigArgs {
  std::string config_path;
  std::string intrinsics_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> stride;
  std::optional<int> jobs;
  std::optional<double> score_min;
  std::optional<double> nms_iou;
  std::optional<double> valid_fraction;
  std::optional<double> vstd_threshold;
  std::optional<double> plane_dist;
  std::string encoding;
  std::string color_scorer;
  std::string depth_scorer;
  std::string annotations_path;

  void add_flags(CLI::App* cmd, bool with_scorers) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--intrinsics", intrinsics_path,
                    "camera intrinsics JSON {fx,fy,cx,cy}");
    cmd->add_option("--seed", seed, "pipeline seed");
    cmd->add_option("--stride", stride, "anchor lattice stride in pixels");
    cmd->add_option("--vstd-threshold", vstd_threshold,
                    "grid cell VSTD cutoff in meters");
    cmd->add_option("--plane-dist", plane_dist,
                    "ground rejection distance in meters");
    cmd->add_option("--valid-fraction", valid_fraction,
                    "minimum valid-pixel fraction for CPF");
    if (with_scorers) {
      cmd->add_option("--jobs", jobs, "frames processed in parallel");
      cmd->add_option("--score-min", score_min, "NMS score cutoff");
      cmd->add_option("--nms-iou", nms_iou, "NMS overlap threshold");
      cmd->add_option("--encoding", encoding, "dg | ce | cd | cecd");
      cmd->add_option("--color-scorer", color_scorer,
                      "oracle | file:PATH | constant:P");
      cmd->add_option("--depth-scorer", depth_scorer,
                      "oracle | file:PATH | constant:P");
      cmd->add_option("--annotations", annotations_path,
                      "ground truth for oracle scorers");
    }
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_pipeline_config(config_path);
    if (!intrinsics_path.empty())
      cfg.intrinsics = io::read_intrinsics(intrinsics_path);
    if (seed) cfg.seed = *seed;
    if (stride) cfg.roi.stride_px = *stride;
    if (jobs) cfg.jobs = *jobs;
    if (score_min) cfg.nms.score_min = *score_min;
    if (nms_iou) cfg.nms.iou_threshold = *nms_iou;
    if (valid_fraction) cfg.roi.valid_fraction_min = *valid_fraction;
    if (vstd_threshold) cfg.roi.vstd_threshold_m = *vstd_threshold;
    if (plane_dist) cfg.roi.plane_dist_threshold_m = *plane_dist;
    if (!encoding.empty()) {
      auto scheme = parse_scheme(encoding);
      if (!scheme) throw std::invalid_argument("unknown encoding: " + encoding);
      cfg.scheme = *scheme;
    }
    if (!color_scorer.empty()) cfg.color_scorer = parse_scorer_spec(color_scorer);
    if (!depth_scorer.empty()) cfg.depth_scorer = parse_scorer_spec(depth_scorer);
    if (!annotations_path.empty()) cfg.annotations_path = annotations_path;
    return cfg;
  }
};

struct ScorerPair {
  std::unique_ptr<Scorer> color;
  std::unique_ptr<Scorer> depth;
};

ScorerPair build_scorers(const PipelineConfig& cfg) {
  std::vector<Annotation> anns;
  bool oracle = cfg.color_scorer.kind == ScorerSpec::Kind::Oracle ||
                cfg.depth_scorer.kind == ScorerSpec::Kind::Oracle;
  if (oracle) {
    if (cfg.annotations_path.empty())
      throw std::invalid_argument(
          "oracle scorer needs --annotations (or scorers.annotations in the "
          "config)");
    anns = io::read_annotations_jsonl(cfg.annotations_path);
  }
  ScorerPair pair;
  pair.color = make_scorer(cfg.color_scorer, cfg.color_noise, anns, cfg.seed, 1);
  pair.depth = make_scorer(cfg.depth_scorer, cfg.depth_noise, anns, cfg.seed, 2);
  return pair;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              int n_frames, std::optional<std::uint64_t> seed_override) {
  SceneSpec spec = io::read_scene_spec(spec_path);
  if (seed_override) spec.seed = *seed_override;
  fs::create_directories(out_dir);

  std::vector<Annotation> all_anns;
  for (int f = 0; f < n_frames; ++f) {
    SceneSpec frame_spec = spec;
    frame_spec.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(f));
    RenderResult res = render(frame_spec, f);
    io::write_depth_pgm(out_dir + "/" + frame_name(f, "pgm"), res.depth);
    all_anns.insert(all_anns.end(), res.annotations.begin(),
                    res.annotations.end());
  }
  io::write_annotations_jsonl(out_dir + "/annotations.jsonl", all_anns);
  io::write_intrinsics(out_dir + "/intrinsics.json", spec.camera);

  RenderResult probe = render(spec, 0);
  auto plane_out = open_out(out_dir + "/plane.json");
  plane_out << "{\"normal\":[" << io::format_double(probe.plane.normal.x)
            << "," << io::format_double(probe.plane.normal.y) << ","
            << io::format_double(probe.plane.normal.z)
            << "],\"offset\":" << io::format_double(probe.plane.offset)
            << "}\n";
  return 0;
}

int cmd_encode(const std::string& in_path, const std::string& out_path,
               const std::string& scheme_str, int fill_radius, int fill_passes,
               const std::string& fixed_range) {
  auto scheme = parse_scheme(scheme_str);
  if (!scheme) throw std::invalid_argument("unknown encoding: " + scheme_str);

  std::optional<std::pair<float, float>> range;
  if (!fixed_range.empty()) {
    std::size_t colon = fixed_range.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("--fixed-range wants MIN_MM:MAX_MM");
    range = {{std::stof(fixed_range.substr(0, colon)),
              std::stof(fixed_range.substr(colon + 1))}};
  }

  auto encode_one = [&](const std::string& in_file,
                        const std::string& out_file) {
    DepthImage raw = io::read_depth_pgm(in_file);
    DepthImage filled =
        fill_passes > 0 ? fill_holes(raw, fill_radius, fill_passes) : raw;
    RgbImage rgb;
    if (range) {
      GrayImage gray = normalize_fixed(filled, range->first, range->second);
      rgb = encode_gray(gray, validity_mask(filled), *scheme);
    } else {
      rgb = encode(filled, *scheme);
    }
    io::write_ppm(out_file, rgb);
  };

  if (fs::is_directory(in_path)) {
    fs::create_directories(out_path);
    for (const FrameFile& f : list_frames(in_path))
      encode_one(f.path, out_path + "/" + frame_name(f.id, "ppm"));
  } else {
    encode_one(in_path, out_path);
  }
  return 0;
}

int cmd_rois(const std::string& in_path, const std::string& out_path,
             const std::string& stages, const ConfigArgs& args) {
  PipelineConfig cfg = args.build();

  bool use_gpd = false, use_cpf = false, use_sis = false;
  std::stringstream ss(stages);
  std::string stage;
  while (std::getline(ss, stage, ',')) {
    if (stage == "gpd")
      use_gpd = true;
    else if (stage == "sis")
      use_sis = true;
    else if (stage == "cpf")
      use_cpf = true;
    else if (!stage.empty())
      throw std::invalid_argument("unknown stage: " + stage);
  }
  if (!use_sis)
    throw std::invalid_argument("--stages must include sis (it generates)");

  auto run_one = [&](const std::string& file, int frame,
                     std::optional<int> tag, std::ostream& os) {
    DepthImage raw = io::read_depth_pgm(file);
    std::optional<GroundPlane> plane;
    if (use_gpd)
      plane = detect_ground_plane(raw, cfg.intrinsics, cfg.roi,
                                  frame_gpd_seed(cfg.seed, frame));
    std::vector<Proposal> props =
        generate_proposals(raw, plane, cfg.intrinsics, cfg.roi);
    if (use_cpf) {
      ValidityIntegral vi = build_validity_integral(raw);
      props = filter_proposals(props, vi, cfg.roi);
    }
    io::write_proposals_jsonl(os, props, tag);
  };

  std::ofstream out = open_out(out_path);
  if (fs::is_directory(in_path)) {
    for (const FrameFile& f : list_frames(in_path))
      run_one(f.path, f.id, f.id, out);
  } else {
    run_one(in_path, 0, std::nullopt, out);
  }
  return 0;
}

int cmd_detect(const std::string& frames_dir, const std::string& out_path,
               const std::string& encoded_dir, const ConfigArgs& args,
               bool dump_config) {
  PipelineConfig cfg = args.build();
  if (dump_config) {
    std::cout << dump_pipeline_config(cfg) << "\n";
    return 0;
  }

  ScorerPair scorers = build_scorers(cfg);
  std::vector<FrameFile> frames = list_frames(frames_dir);

  DetectOptions opts;
  opts.want_encoded = !encoded_dir.empty();
  if (opts.want_encoded) fs::create_directories(encoded_dir);

  std::vector<FrameOutput> results(frames.size());
  std::exception_ptr error;
  std::atomic<bool> failed{false};

#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      DepthImage raw = io::read_depth_pgm(frames[i].path);
      results[i] = detect_frame(raw, frames[i].id, cfg, *scorers.color,
                                *scorers.depth, opts);
    } catch (...) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);

  std::vector<io::DetectionRecord> recs;
  for (const FrameOutput& fo : results) {
    for (const ScoredProposal& sp : fo.detections)
      recs.push_back({fo.frame, sp.proposal.box(), sp.p_color, sp.p_depth,
                      sp.p_fused});
    if (opts.want_encoded)
      io::write_ppm(encoded_dir + "/" + frame_name(fo.frame, "ppm"),
                    fo.encoded);
  }

  if (out_path == "-") {
    io::write_detections_jsonl(std::cout, recs);
  } else {
    std::ofstream out = open_out(out_path);
    io::write_detections_jsonl(out, recs);
  }
  return 0;
}

int cmd_eval(const std::string& det_path, const std::string& ann_path,
             const std::string& pr_path, const std::string& curve_path,
             double iou_min, const std::string& score_field) {
  std::vector<io::DetectionRecord> recs = io::read_detections_jsonl(det_path);
  std::vector<Annotation> anns = io::read_annotations_jsonl(ann_path);

  std::vector<Detection> dets;
  dets.reserve(recs.size());
  for (const io::DetectionRecord& r : recs) {
    double score = r.p_fused;
    if (score_field == "color")
      score = r.p_color;
    else if (score_field == "depth")
      score = r.p_depth;
    else if (score_field != "fused")
      throw std::invalid_argument("--score must be fused | color | depth");
    dets.push_back({r.frame, r.box, score});
  }

  std::vector<double> thresholds = score_thresholds(dets);
  if (thresholds.empty()) thresholds.push_back(1.0);
  std::vector<PrPoint> curve = pr_curve(dets, anns, thresholds, iou_min);

  if (!pr_path.empty()) {
    std::ofstream out = open_out(pr_path);
    io::write_pr_csv(out, curve);
  }
  if (!curve_path.empty()) {
    std::ofstream out = open_out(curve_path);
    io::write_pr_curve(out, curve);
  }
  std::cout << io::format_double(average_precision(curve)) << "\n";
  return 0;
}

int cmd_bench(const std::string& frames_dir, const std::string& out_path,
              int repeat, const ConfigArgs& args) {
  PipelineConfig cfg = args.build();
  ScorerPair scorers = build_scorers(cfg);

  std::vector<DepthImage> frames;
  for (const FrameFile& f : list_frames(frames_dir))
    frames.push_back(io::read_depth_pgm(f.path));
  if (frames.size() < 10)
    std::cerr << "bench: fewer than 10 frames, timings may be cold\n";

  std::vector<BenchRow> rows =
      run_bench(frames, cfg, *scorers.color, *scorers.depth, repeat);

  auto emit = [&](std::ostream& os) {
    os << "name,impl,value\n";
    for (const BenchRow& r : rows)
      os << r.name << "," << r.impl << "," << io::format_double(r.value)
         << "\n";
  };
  if (out_path.empty() || out_path == "-") {
    emit(std::cout);
  } else {
    std::ofstream out = open_out(out_path);
    emit(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-driven RGB-D human detection pipeline"};
  app.require_subcommand(1);
  int rc = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "render synthetic depth frames");
  std::string synth_spec, synth_out;
  int synth_frames = 1;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec, "scene spec JSON")->required();
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--frames", synth_frames, "number of frames");
  synth->add_option("--seed", synth_seed, "override the spec seed");
  synth->callback(
      [&] { rc = cmd_synth(synth_spec, synth_out, synth_frames, synth_seed); });

  // encode
  auto* encode = app.add_subcommand("encode", "encode depth into 3 channels");
  std::string enc_in, enc_out, enc_scheme = "cecd", enc_range;
  int enc_radius = 2, enc_passes = 3;
  encode->add_option("--in", enc_in, "depth PGM file or frame directory")
      ->required();
  encode->add_option("--out", enc_out, "PPM file or directory")->required();
  encode->add_option("--encoding", enc_scheme, "dg | ce | cd | cecd");
  encode->add_option("--fill-radius", enc_radius, "hole-fill kernel radius");
  encode->add_option("--fill-passes", enc_passes, "hole-fill passes (0 = off)");
  encode->add_option("--fixed-range", enc_range,
                     "MIN_MM:MAX_MM fixed normalization range");
  encode->callback([&] {
    rc = cmd_encode(enc_in, enc_out, enc_scheme, enc_radius, enc_passes,
                    enc_range);
  });

  // rois
  auto* rois = app.add_subcommand("rois", "depth-driven proposal generation");
  std::string rois_in, rois_out, rois_stages = "gpd,sis,cpf";
  ConfigArgs rois_args;
  rois->add_option("--in", rois_in, "depth PGM file or frame directory")
      ->required();
  rois->add_option("--out", rois_out, "proposals JSONL")->required();
  rois->add_option("--stages", rois_stages, "subset of gpd,sis,cpf");
  rois_args.add_flags(rois, false);
  rois->callback([&] { rc = cmd_rois(rois_in, rois_out, rois_stages, rois_args); });

  // detect
  auto* detect = app.add_subcommand("detect", "full detection pipeline");
  std::string det_frames, det_out = "-", det_encoded;
  bool det_dump = false;
  ConfigArgs det_args;
  detect->add_option("--frames", det_frames, "depth frame directory");
  detect->add_option("--out", det_out, "detections JSONL ('-' = stdout)");
  detect->add_option("--encoded-out", det_encoded,
                     "directory for encoded PPM frames");
  detect->add_flag("--dump-config", det_dump,
                   "print the effective config and exit");
  det_args.add_flags(detect, true);
  detect->callback([&] {
    if (!det_dump && det_frames.empty())
      throw CLI::ValidationError("--frames is required");
    rc = cmd_detect(det_frames, det_out, det_encoded, det_args, det_dump);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "precision/recall evaluation");
  std::string eval_det, eval_ann, eval_pr, eval_curve, eval_score = "fused";
  double eval_iou = 0.5;
  eval->add_option("--detections", eval_det, "detections JSONL")->required();
  eval->add_option("--annotations", eval_ann, "annotations JSONL")->required();
  eval->add_option("--pr-out", eval_pr, "PR curve CSV");
  eval->add_option("--curve-out", eval_curve, "gnuplot recall/precision file");
  eval->add_option("--iou", eval_iou, "match overlap threshold");
  eval->add_option("--score", eval_score, "fused | color | depth");
  eval->callback([&] {
    rc = cmd_eval(eval_det, eval_ann, eval_pr, eval_curve, eval_iou,
                  eval_score);
  });

  // bench
  auto* bench = app.add_subcommand("bench", "per-stage timing report");
  std::string bench_frames, bench_out;
  int bench_repeat = 1;
  ConfigArgs bench_args;
  bench->add_option("--frames", bench_frames, "depth frame directory")
      ->required();
  bench->add_option("--out", bench_out, "CSV path (default stdout)");
  bench->add_option("--repeat", bench_repeat, "sequence repetitions");
  bench_args.add_flags(bench, true);
  bench->callback(
      [&] { rc = cmd_bench(bench_frames, bench_out, bench_repeat, bench_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
