#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rgbd/common.hpp"
#include "rgbd/roi.hpp"

namespace rgbd {

// Depth-adaptive mixing weight: 1 at or below d_near, 0 at or beyond d_far,
// linear in between (the defaults reduce to -(1/5)(d-1)+1 on (1,6)).
struct FusionWeightParams {
  double d_near_m = 1.0;
  double d_far_m = 6.0;
};

double weight(double depth_m, const FusionWeightParams& params = {});

// Two-class normalized geometric fusion of the modality probabilities;
// w = 0 returns p_color, w = 1 returns p_depth. Inputs are clamped to
// [1e-9, 1 - 1e-9] so boundary probabilities stay finite.
double fuse(double p_color, double p_depth, double w);

double iou(const Box& a, const Box& b);

struct ScoredProposal {
  Proposal proposal;
  double p_color = 0.0;
  double p_depth = 0.0;
  double p_fused = 0.0;
};

struct NmsParams {
  double iou_threshold = 0.3;
  double score_min = 0.5;
};

// Greedy non-maximum suppression on p_fused: drop below score_min, then
// repeatedly keep the best remaining window and suppress everything
// overlapping it above iou_threshold. Ties break on smaller y, then x.
// Output is ordered by descending score.
std::vector<ScoredProposal> nms(std::vector<ScoredProposal> scored,
                                const NmsParams& params = {});

// Per-proposal probability source standing in for a CNN. Implementations
// must be safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(int frame, const Proposal& p) const = 0;
};

class ConstantScorer : public Scorer {
 public:
  explicit ConstantScorer(double p);
  double score(int frame, const Proposal& p) const override;

 private:
  double p_;
};

class MissingScoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable map of per-proposal probabilities preloaded from a JSON-lines
// file of {"frame":..,"x":..,"y":..,"side":..,"p":..} records. Lets CNN
// outputs produced offline drive the fusion stage. Unknown proposals raise
// MissingScoreError naming the offending window.
class FileScorer : public Scorer {
 public:
  static FileScorer load(const std::string& path);

  void insert(int frame, const Box& box, double p);
  double score(int frame, const Proposal& p) const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::tuple<int, int, int, int>, double> scores_;
};

// Scores every proposal with both modalities and fuses them with the
// depth-adaptive weight.
std::vector<ScoredProposal> score_frame(int frame,
                                        std::span<const Proposal> proposals,
                                        const Scorer& color,
                                        const Scorer& depth,
                                        const FusionWeightParams& params = {});

namespace serial {
std::vector<ScoredProposal> score_frame(int frame,
                                        std::span<const Proposal> proposals,
                                        const Scorer& color,
                                        const Scorer& depth,
                                        const FusionWeightParams& params = {});
}

}  // namespace rgbd
