#include "voclip/kitti_eval.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace voclip {

namespace {

void require_matched(const Trajectory& pred, const Trajectory& gt, std::size_t min_len, const char* who) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument(std::string(who) + ": trajectory lengths differ (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(gt.size()) + ")");
  }
  if (pred.size() < min_len) {
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_len) + " poses");
  }
}

/// Rotation angle of a relative transform, radians.
double rotation_angle(const Mat3& r) {
  const double d = 0.5 * (r[0][0] + r[1][1] + r[2][2] - 1.0);
  return std::acos(std::clamp(d, -1.0, 1.0));
}

Trajectory anchored(const Trajectory& t) {
  Trajectory out;
  out.poses.reserve(t.size());
  const TransformSE3 inv0 = invert(t.poses[0]);
  for (const auto& p : t.poses) out.poses.push_back(compose(inv0, p));
  return out;
}

}  // namespace

std::string to_string(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::None: return "none";
    case AlignmentMode::Rigid6Dof: return "6dof";
    case AlignmentMode::Similarity7Dof: return "7dof";
  }
  return "none";
}

AlignmentMode alignment_from_string(const std::string& s) {
  if (s == "none") return AlignmentMode::None;
  if (s == "6dof") return AlignmentMode::Rigid6Dof;
  if (s == "7dof") return AlignmentMode::Similarity7Dof;
  throw std::invalid_argument("unknown alignment mode '" + s + "' (expected none|6dof|7dof)");
}

SimilarityTransform umeyama_align(const Trajectory& pred, const Trajectory& gt, bool with_scale) {
  require_matched(pred, gt, 3, "umeyama_align");
  const std::size_t n = pred.size();

  Eigen::Vector3d mean_x = Eigen::Vector3d::Zero();  // pred
  Eigen::Vector3d mean_y = Eigen::Vector3d::Zero();  // gt
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += Eigen::Vector3d(pred.position(i)[0], pred.position(i)[1], pred.position(i)[2]);
    mean_y += Eigen::Vector3d(gt.position(i)[0], gt.position(i)[1], gt.position(i)[2]);
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sigma_x = 0.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d dx = Eigen::Vector3d(pred.position(i)[0], pred.position(i)[1], pred.position(i)[2]) - mean_x;
    const Eigen::Vector3d dy = Eigen::Vector3d(gt.position(i)[0], gt.position(i)[1], gt.position(i)[2]) - mean_y;
    sigma_x += dx.squaredNorm();
    cov += dy * dx.transpose();
  }
  sigma_x /= static_cast<double>(n);
  cov /= static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  if (!(d(1) > 1e-12 * std::max(1.0, d(0)))) {
    throw std::invalid_argument("umeyama_align: degenerate position covariance (rank < 2)");
  }

  Eigen::Matrix3d s_fix = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_fix(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * s_fix * svd.matrixV().transpose();

  double scale = 1.0;
  if (with_scale) {
    if (!(sigma_x > 0.0)) throw std::invalid_argument("umeyama_align: zero variance in predicted positions");
    scale = (d.asDiagonal().toDenseMatrix() * s_fix).trace() / sigma_x;
  }
  const Eigen::Vector3d t = mean_y - scale * r * mean_x;

  SimilarityTransform out;
  out.scale = scale;
  Mat3 rm{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) rm[i][j] = r(i, j);
  }
  out.rotation = RotationMatrix::unchecked(rm);
  out.translation = {t(0), t(1), t(2)};
  return out;
}

Trajectory apply_similarity(const SimilarityTransform& a, const Trajectory& traj) {
  Trajectory out;
  out.poses.reserve(traj.size());
  for (const auto& p : traj.poses) {
    TransformSE3 q;
    q.rotation = RotationMatrix::unchecked(mat3_mul(a.rotation.m, p.rotation.m));
    q.translation = mat3_apply(a.rotation.m, a.scale * p.translation) + a.translation;
    out.poses.push_back(q);
  }
  return out;
}

namespace {

Trajectory align_per_mode(const Trajectory& pred, const Trajectory& gt, AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::None: return pred;
    case AlignmentMode::Rigid6Dof: return apply_similarity(umeyama_align(pred, gt, false), pred);
    case AlignmentMode::Similarity7Dof: return apply_similarity(umeyama_align(pred, gt, true), pred);
  }
  return pred;
}

}  // namespace

double ate(const Trajectory& pred, const Trajectory& gt, AlignmentMode mode) {
  require_matched(pred, gt, 1, "ate");
  const Trajectory aligned = align_per_mode(pred, gt, mode);
  double acc = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Vec3 d = aligned.position(i) - gt.position(i);
    acc += dot(d, d);
  }
  return std::sqrt(acc / static_cast<double>(gt.size()));
}

RpeResult rpe(const Trajectory& pred, const Trajectory& gt) {
  require_matched(pred, gt, 2, "rpe");
  double t_acc = 0.0;
  double r_acc = 0.0;
  const std::size_t steps = gt.size() - 1;
  for (std::size_t k = 0; k < steps; ++k) {
    const TransformSE3 rel_gt = compose(invert(gt.poses[k]), gt.poses[k + 1]);
    const TransformSE3 rel_pred = compose(invert(pred.poses[k]), pred.poses[k + 1]);
    const TransformSE3 err = compose(invert(rel_gt), rel_pred);
    t_acc += norm(err.translation);
    r_acc += rotation_angle(err.rotation.m);
  }
  RpeResult out;
  out.trans_m = t_acc / static_cast<double>(steps);
  out.rot_deg = (r_acc / static_cast<double>(steps)) * 180.0 / M_PI;
  return out;
}

std::vector<double> trajectory_distances(const Trajectory& gt) {
  std::vector<double> d(gt.size(), 0.0);
  for (std::size_t i = 1; i < gt.size(); ++i) {
    d[i] = d[i - 1] + norm(gt.position(i) - gt.position(i - 1));
  }
  return d;
}

namespace {

/// First frame whose arc distance exceeds dist[first] + len, or -1.
std::int64_t last_frame_for_length(const std::vector<double>& dist, std::size_t first, double len) {
  for (std::size_t i = first; i < dist.size(); ++i) {
    if (dist[i] > dist[first] + len) return static_cast<std::int64_t>(i);
  }
  return -1;
}

}  // namespace

SegmentErrors kitti_segment_errors(const Trajectory& pred, const Trajectory& gt, const SegmentErrorOptions& opts) {
  require_matched(pred, gt, 2, "kitti_segment_errors");
  if (opts.start_stride < 1) throw std::invalid_argument("kitti_segment_errors: start_stride must be >= 1");
  const std::vector<double> dist = trajectory_distances(gt);

  struct PerStart {
    double t_sum = 0.0;
    double r_sum = 0.0;
    std::vector<std::pair<int, std::int64_t>> counts;
  };
  std::vector<std::size_t> starts;
  for (std::size_t first = 0; first < gt.size(); first += static_cast<std::size_t>(opts.start_stride)) {
    starts.push_back(first);
  }
  std::vector<PerStart> per_start(starts.size());

  // independent per start frame; summed in fixed order afterwards
#pragma omp parallel for schedule(static)
  for (std::int64_t si = 0; si < static_cast<std::int64_t>(starts.size()); ++si) {
    const std::size_t first = starts[static_cast<std::size_t>(si)];
    PerStart& ps = per_start[static_cast<std::size_t>(si)];
    for (int len : opts.lengths_m) {
      const std::int64_t last = last_frame_for_length(dist, first, static_cast<double>(len));
      if (last < 0) continue;
      const auto lu = static_cast<std::size_t>(last);
      const TransformSE3 delta_gt = compose(invert(gt.poses[first]), gt.poses[lu]);
      const TransformSE3 delta_pred = compose(invert(pred.poses[first]), pred.poses[lu]);
      const TransformSE3 err = compose(invert(delta_pred), delta_gt);
      ps.t_sum += norm(err.translation) / static_cast<double>(len);
      ps.r_sum += rotation_angle(err.rotation.m) / static_cast<double>(len);
      ps.counts.emplace_back(len, 1);
    }
  }

  SegmentErrors out;
  double t_sum = 0.0, r_sum = 0.0;
  std::int64_t n = 0;
  for (int len : opts.lengths_m) out.n_segments_per_length[len] = 0;
  for (const PerStart& ps : per_start) {
    t_sum += ps.t_sum;
    r_sum += ps.r_sum;
    for (const auto& [len, c] : ps.counts) {
      out.n_segments_per_length[len] += c;
      n += c;
    }
  }
  if (n == 0) {
    out.has_segments = false;
    return out;
  }
  out.has_segments = true;
  out.t_err_percent = (t_sum / static_cast<double>(n)) * 100.0;
  out.r_err_deg_per_100m = (r_sum / static_cast<double>(n)) * (180.0 / M_PI) * 100.0;
  return out;
}

EvalReport evaluate(const Trajectory& pred, const Trajectory& gt, AlignmentMode mode, const EvaluateOptions& opts) {
  require_matched(pred, gt, 2, "evaluate");
  Trajectory p = pred;
  Trajectory g = gt;
  if (opts.anchor_first_frame) {
    p = anchored(p);
    g = anchored(g);
  }
  p = align_per_mode(p, g, mode);

  EvalReport rep;
  rep.alignment = mode;
  const SegmentErrors seg = kitti_segment_errors(p, g, opts.segments);
  rep.t_err_percent = seg.t_err_percent;
  rep.r_err_deg_per_100m = seg.r_err_deg_per_100m;
  rep.n_segments_per_length = seg.n_segments_per_length;
  rep.has_segments = seg.has_segments;
  rep.ate_m = ate(p, g, AlignmentMode::None);
  const RpeResult r = rpe(p, g);
  rep.rpe_trans_m = r.trans_m;
  rep.rpe_rot_deg = r.rot_deg;
  return rep;
}

std::string EvalReport::to_text() const {
  char buf[128];
  std::string out;
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.6f\n", key, v);
    out += buf;
  };
  kv("t_err_percent", t_err_percent);
  kv("r_err_deg_per_100m", r_err_deg_per_100m);
  kv("ate_m", ate_m);
  kv("rpe_trans_m", rpe_trans_m);
  kv("rpe_rot_deg", rpe_rot_deg);
  out += "alignment=" + to_string(alignment) + "\n";
  out += "has_segments=" + std::string(has_segments ? "1" : "0") + "\n";
  for (const auto& [len, c] : n_segments_per_length) {
    std::snprintf(buf, sizeof(buf), "n_segments_%dm=%lld\n", len, static_cast<long long>(c));
    out += buf;
  }
  return out;
}

}  // namespace voclip
