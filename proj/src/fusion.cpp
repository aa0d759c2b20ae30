#include "rgbd/fusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rgbd {

namespace {

constexpr double kProbEps = 1e-9;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

bool score_order(const ScoredProposal& a, const ScoredProposal& b) {
  if (a.p_fused != b.p_fused) return a.p_fused > b.p_fused;
  if (a.proposal.y != b.proposal.y) return a.proposal.y < b.proposal.y;
  return a.proposal.x < b.proposal.x;
}

}  // namespace

double weight(double depth_m, const FusionWeightParams& params) {
  if (depth_m <= params.d_near_m) return 1.0;
  if (depth_m >= params.d_far_m) return 0.0;
  return 1.0 - (depth_m - params.d_near_m) / (params.d_far_m - params.d_near_m);
}

double fuse(double p_color, double p_depth, double w) {
  double pc = clamp_prob(p_color);
  double pd = clamp_prob(p_depth);
  double pos = std::pow(pc, 1.0 - w) * std::pow(pd, w);
  double neg = std::pow(1.0 - pc, 1.0 - w) * std::pow(1.0 - pd, w);
  return pos / (pos + neg);
}

double iou(const Box& a, const Box& b) {
  long ix = std::max(0, std::min(a.x + a.side, b.x + b.side) -
                            std::max(a.x, b.x));
  long iy = std::max(0, std::min(a.y + a.side, b.y + b.side) -
                            std::max(a.y, b.y));
  long inter = ix * iy;
  long uni = static_cast<long>(a.side) * a.side +
             static_cast<long>(b.side) * b.side - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::vector<ScoredProposal> nms(std::vector<ScoredProposal> scored,
                                const NmsParams& params) {
  std::erase_if(scored, [&](const ScoredProposal& s) {
    return s.p_fused < params.score_min;
  });
  std::sort(scored.begin(), scored.end(), score_order);

  std::vector<ScoredProposal> kept;
  std::vector<char> alive(scored.size(), 1);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!alive[i]) continue;
    kept.push_back(scored[i]);
    for (std::size_t j = i + 1; j < scored.size(); ++j)
      if (alive[j] &&
          iou(scored[i].proposal.box(), scored[j].proposal.box()) >
              params.iou_threshold)
        alive[j] = 0;
  }
  return kept;
}

ConstantScorer::ConstantScorer(double p) : p_(std::clamp(p, 0.0, 1.0)) {}

double ConstantScorer::score(int, const Proposal&) const { return p_; }

FileScorer FileScorer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingScoreError("cannot open score file: " + path);
  FileScorer fs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("frame") || !j.contains("x") ||
        !j.contains("y") || !j.contains("side") || !j.contains("p")) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": bad score record";
      throw MissingScoreError(msg.str());
    }
    fs.insert(j["frame"].get<int>(),
              Box{j["x"].get<int>(), j["y"].get<int>(), j["side"].get<int>()},
              j["p"].get<double>());
  }
  return fs;
}

void FileScorer::insert(int frame, const Box& box, double p) {
  scores_[{frame, box.x, box.y, box.side}] = p;
}

double FileScorer::score(int frame, const Proposal& p) const {
  auto it = scores_.find({frame, p.x, p.y, p.side});
  if (it == scores_.end()) {
    std::ostringstream msg;
    msg << "no score for frame=" << frame << " proposal x=" << p.x
        << " y=" << p.y << " side=" << p.side;
    throw MissingScoreError(msg.str());
  }
  return it->second;
}

std::vector<ScoredProposal> score_frame(int frame,
                                        std::span<const Proposal> proposals,
                                        const Scorer& color,
                                        const Scorer& depth,
                                        const FusionWeightParams& params) {
  std::vector<ScoredProposal> out(proposals.size());
  std::atomic<bool> failed{false};
  std::exception_ptr error;

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      const Proposal& p = proposals[i];
      double pc = color.score(frame, p);
      double pd = depth.score(frame, p);
      out[i] = {p, pc, pd, fuse(pc, pd, weight(p.depth_m, params))};
    } catch (...) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace serial {

std::vector<ScoredProposal> score_frame(int frame,
                                        std::span<const Proposal> proposals,
                                        const Scorer& color,
                                        const Scorer& depth,
                                        const FusionWeightParams& params) {
  std::vector<ScoredProposal> out;
  out.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    double pc = color.score(frame, p);
    double pd = depth.score(frame, p);
    out.push_back({p, pc, pd, fuse(pc, pd, weight(p.depth_m, params))});
  }
  return out;
}

}  // namespace serial

}  // namespace rgbd
