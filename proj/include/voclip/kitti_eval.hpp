#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "voclip/se3.hpp"

namespace voclip {

enum class AlignmentMode {
  None,
  Rigid6Dof,      // rotation + translation
  Similarity7Dof, // rotation + translation + scale
};

std::string to_string(AlignmentMode m);
AlignmentMode alignment_from_string(const std::string& s);

struct SimilarityTransform {
  double scale = 1.0;
  RotationMatrix rotation;
  Vec3 translation{0.0, 0.0, 0.0};
};

struct EvalReport {
  double t_err_percent = 0.0;       // mean segment translational error, %
  double r_err_deg_per_100m = 0.0;  // mean segment rotational error, deg/100 m
  double ate_m = 0.0;               // RMSE of aligned positions, m
  double rpe_trans_m = 0.0;         // mean frame-to-frame translation error, m
  double rpe_rot_deg = 0.0;         // mean frame-to-frame rotation angle, deg
  AlignmentMode alignment = AlignmentMode::None;
  std::map<int, std::int64_t> n_segments_per_length;
  bool has_segments = false;

  /// Flat key-value text, 6-decimal fixed point.
  std::string to_text() const;
};

struct SegmentErrorOptions {
  std::vector<int> lengths_m = {100, 200, 300, 400, 500, 600, 700, 800};
  int start_stride = 10;  // start-frame step, frames
};

/// Closed-form least-squares similarity fit of pred positions onto gt
/// positions: minimizes sum ||s R p + t - g||^2. with_scale = false pins
/// s = 1. Needs >= 3 poses and a position covariance of rank >= 2.
SimilarityTransform umeyama_align(const Trajectory& pred, const Trajectory& gt, bool with_scale);

/// Applies the fit to every pose: translations become s R p + t, rotations
/// are left-multiplied by R.
Trajectory apply_similarity(const SimilarityTransform& a, const Trajectory& traj);

/// RMSE of position differences after aligning pred per mode.
double ate(const Trajectory& pred, const Trajectory& gt, AlignmentMode mode);

/// Mean frame-to-frame relative-pose error: (meters, degrees).
struct RpeResult {
  double trans_m = 0.0;
  double rot_deg = 0.0;
};
RpeResult rpe(const Trajectory& pred, const Trajectory& gt);

/// Cumulative arc length per frame; d[0] = 0.
std::vector<double> trajectory_distances(const Trajectory& gt);

struct SegmentErrors {
  double t_err_percent = 0.0;
  double r_err_deg_per_100m = 0.0;
  std::map<int, std::int64_t> n_segments_per_length;
  bool has_segments = false;
};

/// Average relative errors over all subsequences of the given gt arc
/// lengths, start frames stepping by start_stride. No alignment is applied
/// here.
SegmentErrors kitti_segment_errors(const Trajectory& pred, const Trajectory& gt,
                                   const SegmentErrorOptions& opts = {});

struct EvaluateOptions {
  SegmentErrorOptions segments;
  /// Re-anchor both trajectories so pose 0 is the identity before aligning,
  /// then compute every metric on the aligned prediction.
  bool anchor_first_frame = true;
};

/// Full metric pipeline: anchor, align pred per mode, then segment errors,
/// ATE and RPE on the aligned trajectory.
EvalReport evaluate(const Trajectory& pred, const Trajectory& gt, AlignmentMode mode,
                    const EvaluateOptions& opts = {});

}  // namespace voclip
