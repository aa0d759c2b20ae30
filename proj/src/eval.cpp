#include "rgbd/eval.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace rgbd {

namespace {

bool det_order(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.y != b.box.y) return a.box.y < b.box.y;
  return a.box.x < b.box.x;
}

struct FrameData {
  std::vector<Detection> dets;  // kept sorted by det_order
  std::vector<Annotation> anns;
};

std::map<int, FrameData> group_by_frame(std::span<const Detection> dets,
                                        std::span<const Annotation> anns) {
  std::map<int, FrameData> frames;
  for (const Detection& d : dets) frames[d.frame].dets.push_back(d);
  for (const Annotation& a : anns) frames[a.frame].anns.push_back(a);
  for (auto& [id, fd] : frames)
    std::sort(fd.dets.begin(), fd.dets.end(), det_order);
  return frames;
}

MatchCounts match_sorted(const std::vector<Detection>& dets,
                         std::span<const Annotation> anns, double iou_min,
                         double threshold) {
  MatchCounts mc;
  std::vector<char> consumed(anns.size(), 0);
  int care_total = 0;
  for (const Annotation& a : anns)
    if (a.care) ++care_total;

  for (const Detection& d : dets) {
    if (d.score < threshold) continue;

    // Best unconsumed care annotation, then best overall overlap.
    int best_care = -1;
    double best_care_iou = 0.0;
    int best_any = -1;
    double best_any_iou = 0.0;
    for (std::size_t a = 0; a < anns.size(); ++a) {
      double ov = iou(d.box, anns[a].box);
      if (ov < iou_min) continue;
      if (ov > best_any_iou) {
        best_any_iou = ov;
        best_any = static_cast<int>(a);
      }
      if (anns[a].care && !consumed[a] && ov > best_care_iou) {
        best_care_iou = ov;
        best_care = static_cast<int>(a);
      }
    }

    if (best_care >= 0) {
      consumed[best_care] = 1;
      ++mc.tp;
    } else if (best_any >= 0 && !anns[best_any].care) {
      ++mc.ignored;  // no-reward-no-penalty
    } else {
      ++mc.fp;  // includes repeats on an already-consumed person
    }
  }
  mc.fn = care_total - mc.tp;
  return mc;
}

PrPoint make_point(double threshold, const MatchCounts& mc) {
  PrPoint pt;
  pt.threshold = threshold;
  pt.tp = mc.tp;
  pt.fp = mc.fp;
  pt.fn = mc.fn;
  long det = mc.tp + mc.fp;
  long pos = mc.tp + mc.fn;
  pt.precision = det > 0 ? static_cast<double>(mc.tp) / det : 1.0;
  pt.recall = pos > 0 ? static_cast<double>(mc.tp) / pos : 0.0;
  return pt;
}

}  // namespace

MatchCounts match_frame(std::vector<Detection> dets,
                        std::span<const Annotation> anns, double iou_min) {
  std::sort(dets.begin(), dets.end(), det_order);
  return match_sorted(dets, anns, iou_min, 0.0);
}

std::vector<double> score_thresholds(std::span<const Detection> dets) {
  std::vector<double> t;
  t.reserve(dets.size());
  for (const Detection& d : dets) t.push_back(d.score);
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

std::vector<PrPoint> pr_curve(std::span<const Detection> dets,
                              std::span<const Annotation> anns,
                              std::span<const double> thresholds_desc,
                              double iou_min) {
  auto frames = group_by_frame(dets, anns);
  std::vector<const FrameData*> flat;
  flat.reserve(frames.size());
  for (const auto& [id, fd] : frames) flat.push_back(&fd);

  std::vector<PrPoint> curve(thresholds_desc.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < thresholds_desc.size(); ++t) {
    MatchCounts total;
    for (const FrameData* fd : flat) {
      MatchCounts mc =
          match_sorted(fd->dets, fd->anns, iou_min, thresholds_desc[t]);
      total.tp += mc.tp;
      total.fp += mc.fp;
      total.fn += mc.fn;
      total.ignored += mc.ignored;
    }
    curve[t] = make_point(thresholds_desc[t], total);
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  if (curve.empty())
    throw std::invalid_argument("average_precision: empty curve");
  double ap = 0.0;
  double prev_r = 0.0;
  double prev_p = curve.front().precision;
  for (const PrPoint& pt : curve) {
    ap += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  return ap;
}

namespace serial {

std::vector<PrPoint> pr_curve(std::span<const Detection> dets,
                              std::span<const Annotation> anns,
                              std::span<const double> thresholds_desc,
                              double iou_min) {
  auto frames = group_by_frame(dets, anns);
  std::vector<PrPoint> curve;
  curve.reserve(thresholds_desc.size());
  for (double threshold : thresholds_desc) {
    MatchCounts total;
    for (const auto& [id, fd] : frames) {
      MatchCounts mc = match_sorted(fd.dets, fd.anns, iou_min, threshold);
      total.tp += mc.tp;
      total.fp += mc.fp;
      total.fn += mc.fn;
      total.ignored += mc.ignored;
    }
    curve.push_back(make_point(threshold, total));
  }
  return curve;
}

}  // namespace serial

}  // namespace rgbd
