#include "rgbd/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace rgbd::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw IoError(path + ": " + what);
}

// Netpbm header token reader: skips whitespace and '#' comments.
int next_token(std::istream& in, const std::string& path) {
  for (;;) {
    int c = in.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = -1;
  if (!(in >> value) || value < 0) fail(path, "malformed PGM header");
  return value;
}

struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& path,
                          const char* magic) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != magic[0] || m1 != magic[1])
    fail(path, std::string("not a binary ") + magic + " file");
  PnmHeader h;
  h.width = next_token(in, path);
  h.height = next_token(in, path);
  h.maxval = next_token(in, path);
  in.get();  // single whitespace before raster
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    fail(path, "bad PGM dimensions");
  return h;
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(path, "invalid JSON");
  return j;
}

json parse_jsonl_line(const std::string& line, const std::string& path,
                      std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    std::ostringstream msg;
    msg << "invalid JSON at line " << lineno;
    fail(path, msg.str());
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, const std::string& path,
        std::size_t lineno) {
  if (!j.contains(key)) {
    std::ostringstream msg;
    msg << "missing field \"" << key << "\" at line " << lineno;
    fail(path, msg.str());
  }
  return j[key].get<T>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

DepthImage read_depth_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  PnmHeader h = read_pnm_header(in, path, "P5");

  DepthImage img(h.width, h.height);
  std::size_t n = img.pixels();
  if (h.maxval > 255) {
    std::vector<unsigned char> raw(n * 2);
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!in) fail(path, "truncated raster");
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<float>(raw[2 * i] << 8 | raw[2 * i + 1]);
  } else {
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!in) fail(path, "truncated raster");
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<float>(raw[i]);
  }
  return img;
}

void write_depth_pgm(const std::string& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  std::vector<unsigned char> raw(img.pixels() * 2);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    long v = round_half_away(img.data[i]);
    v = std::clamp(v, 0L, 65535L);
    raw[2 * i] = static_cast<unsigned char>(v >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
  if (!out) fail(path, "write failed");
}

GrayImage read_gray_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  PnmHeader h = read_pnm_header(in, path, "P5");
  if (h.maxval > 255) fail(path, "expected 8-bit PGM");

  GrayImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.data.data()), img.data.size());
  if (!in) fail(path, "truncated raster");
  return img;
}

void write_gray_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), img.data.size());
  if (!out) fail(path, "write failed");
}

void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), img.data.size());
  if (!out) fail(path, "write failed");
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  json j = parse_json_file(path);
  CameraIntrinsics K;
  K.fx = field<double>(j, "fx", path, 1);
  K.fy = field<double>(j, "fy", path, 1);
  K.cx = field<double>(j, "cx", path, 1);
  K.cy = field<double>(j, "cy", path, 1);
  if (K.fx <= 0.0 || K.fy <= 0.0) fail(path, "focal lengths must be positive");
  return K;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  ordered_json j;
  j["fx"] = K.fx;
  j["fy"] = K.fy;
  j["cx"] = K.cx;
  j["cy"] = K.cy;
  out << j.dump() << "\n";
}

SceneSpec read_scene_spec(const std::string& path) {
  json j = parse_json_file(path);
  SceneSpec spec;
  if (j.contains("camera")) {
    const json& c = j["camera"];
    spec.camera.fx = c.value("fx", spec.camera.fx);
    spec.camera.fy = c.value("fy", spec.camera.fy);
    spec.camera.cx = c.value("cx", spec.camera.cx);
    spec.camera.cy = c.value("cy", spec.camera.cy);
  }
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.floor_height_m = j.value("floor_height_m", spec.floor_height_m);
  spec.depth_noise_sigma_mm =
      j.value("depth_noise_sigma_mm", spec.depth_noise_sigma_mm);
  spec.invalid_fraction = j.value("invalid_fraction", spec.invalid_fraction);
  spec.max_depth_m = j.value("max_depth_m", spec.max_depth_m);
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("persons")) {
    for (const json& p : j["persons"]) {
      PersonSpec ps;
      ps.x_m = p.value("x_m", ps.x_m);
      ps.z_m = p.value("z_m", ps.z_m);
      ps.width_m = p.value("width_m", ps.width_m);
      ps.height_m = p.value("height_m", ps.height_m);
      spec.persons.push_back(ps);
    }
  }
  if (spec.width <= 0 || spec.height <= 0 || spec.camera.fx <= 0.0 ||
      spec.camera.fy <= 0.0 || spec.floor_height_m <= 0.0)
    fail(path, "invalid scene spec");
  return spec;
}

void write_proposals_jsonl(std::ostream& os, std::span<const Proposal> props,
                           std::optional<int> frame) {
  for (const Proposal& p : props) {
    ordered_json j;
    if (frame) j["frame"] = *frame;
    j["x"] = p.x;
    j["y"] = p.y;
    j["side"] = p.side;
    j["depth_m"] = p.depth_m;
    os << j.dump() << "\n";
  }
}

std::vector<Proposal> read_proposals_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<Proposal> props;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, path, lineno);
    Proposal p;
    p.x = field<int>(j, "x", path, lineno);
    p.y = field<int>(j, "y", path, lineno);
    p.side = field<int>(j, "side", path, lineno);
    p.depth_m = field<double>(j, "depth_m", path, lineno);
    props.push_back(p);
  }
  return props;
}

void write_detections_jsonl(std::ostream& os,
                            std::span<const DetectionRecord> recs) {
  for (const DetectionRecord& r : recs) {
    ordered_json j;
    j["frame"] = r.frame;
    j["x"] = r.box.x;
    j["y"] = r.box.y;
    j["side"] = r.box.side;
    j["p_color"] = r.p_color;
    j["p_depth"] = r.p_depth;
    j["p_fused"] = r.p_fused;
    os << j.dump() << "\n";
  }
}

std::vector<DetectionRecord> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<DetectionRecord> recs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, path, lineno);
    DetectionRecord r;
    r.frame = field<int>(j, "frame", path, lineno);
    r.box.x = field<int>(j, "x", path, lineno);
    r.box.y = field<int>(j, "y", path, lineno);
    r.box.side = field<int>(j, "side", path, lineno);
    r.p_color = field<double>(j, "p_color", path, lineno);
    r.p_depth = field<double>(j, "p_depth", path, lineno);
    r.p_fused = field<double>(j, "p_fused", path, lineno);
    recs.push_back(r);
  }
  return recs;
}

void write_annotations_jsonl(const std::string& path,
                             std::span<const Annotation> anns) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  for (const Annotation& a : anns) {
    ordered_json j;
    j["frame"] = a.frame;
    j["x"] = a.box.x;
    j["y"] = a.box.y;
    j["side"] = a.box.side;
    j["care"] = a.care;
    out << j.dump() << "\n";
  }
}

std::vector<Annotation> read_annotations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<Annotation> anns;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, path, lineno);
    Annotation a;
    a.frame = field<int>(j, "frame", path, lineno);
    a.box.x = field<int>(j, "x", path, lineno);
    a.box.y = field<int>(j, "y", path, lineno);
    a.box.side = field<int>(j, "side", path, lineno);
    a.care = j.value("care", true);
    anns.push_back(a);
  }
  return anns;
}

void write_pr_csv(std::ostream& os, std::span<const PrPoint> curve) {
  os << "threshold,precision,recall,tp,fp,fn\n";
  for (const PrPoint& pt : curve)
    os << format_double(pt.threshold) << "," << format_double(pt.precision)
       << "," << format_double(pt.recall) << "," << pt.tp << "," << pt.fp
       << "," << pt.fn << "\n";
}

void write_pr_curve(std::ostream& os, std::span<const PrPoint> curve) {
  os << "# recall precision\n";
  for (const PrPoint& pt : curve)
    os << format_double(pt.recall) << " " << format_double(pt.precision)
       << "\n";
}

}  // namespace rgbd::io
