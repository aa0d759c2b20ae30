#pragma once

#include <span>
#include <vector>

#include "rgbd/common.hpp"
#include "rgbd/fusion.hpp"

namespace rgbd {

struct Annotation {
  int frame = 0;
  Box box;
  bool care = true;  // false = no-reward-no-penalty region
};

struct Detection {
  int frame = 0;
  Box box;
  double score = 0.0;
};

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int ignored = 0;
};

// Greedy one-to-one matching in score order (ties on smaller y, then x).
// A detection matching an unconsumed care annotation at IoU >= iou_min is a
// TP and consumes it; matching only already-consumed care annotations is a
// FP (repeated-detection penalty); a detection whose best overlap is a
// don't-care annotation is ignored; anything else is a FP. Unconsumed care
// annotations count as FN.
MatchCounts match_frame(std::vector<Detection> dets,
                        std::span<const Annotation> anns, double iou_min);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

// One PrPoint per threshold (descending): detections with score >= threshold
// are matched frame by frame and the counts aggregated.
std::vector<PrPoint> pr_curve(std::span<const Detection> dets,
                              std::span<const Annotation> anns,
                              std::span<const double> thresholds_desc,
                              double iou_min = 0.5);

// Distinct detection scores, descending — the natural threshold sweep.
std::vector<double> score_thresholds(std::span<const Detection> dets);

// Trapezoidal area under precision(recall), prefixed with
// (recall 0, precision of the first point). Throws on an empty curve.
double average_precision(std::span<const PrPoint> curve);

namespace serial {
std::vector<PrPoint> pr_curve(std::span<const Detection> dets,
                              std::span<const Annotation> anns,
                              std::span<const double> thresholds_desc,
                              double iou_min = 0.5);
}

}  // namespace rgbd
