#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "voclip/clip.hpp"
#include "voclip/se3.hpp"

namespace voclip {

/// Per-clip predicted motions: row w is the flattened 6-DoF estimate of the
/// clip's w-th transition, laid out (rx, ry, rz, tx, ty, tz).
using Motions = std::vector<Vec6>;

enum class McReduction {
  Sum,   // plain sum over pairs in the batch
  Mean,  // sum divided by the number of pairs (default)
};

struct LossConfig {
  double alpha = 1.0;
  McReduction mc_reduction = McReduction::Mean;

  void validate() const;
};

struct LossBreakdown {
  double mse = 0.0;
  double mc = 0.0;
  double total = 0.0;  // always computed as mse + alpha * mc, in that order
  std::int64_t n_consistency_pairs = 0;
};

/// Mean over clips of (1 / (n_frames - 1)) * sum_w ||pred_w - target_w||^2.
double mse_loss(std::span<const Motions> preds, std::span<const Motions> targets);

/// Consistency loss of a group of consecutive clips ordered newest first
/// (clip g ends g frames before clip 0). Sums squared differences between
/// estimates of the same motion from different clips, iterating the motion
/// offset j outermost, then clip offsets m < n. n_terms, when given, receives
/// the number of squared-difference terms.
double mc_group_closed(std::span<const Motions> group_newest_first, int n_frames,
                       std::int64_t* n_terms = nullptr);

/// Closed-form consistency loss of a batch of clip pairs. preds follow
/// ClipPairBatch::clips() order.
double mc_loss_closed(std::span<const Motions> preds, const ClipPairBatch& batch,
                      McReduction reduction = McReduction::Mean,
                      std::int64_t* n_terms = nullptr);

/// Brute-force consistency loss straight from the overlap map: for every
/// motion with two or more occurrences inside one pair, add the squared
/// difference of every unordered occurrence pair. Independent of the closed
/// form; kept as its oracle.
double mc_loss_oracle(const OverlapMap& map, std::span<const Motions> preds,
                      McReduction reduction = McReduction::Mean,
                      std::size_t n_pairs_in_batch = 0);

/// mse + alpha * mc for a full batch.
LossBreakdown total_loss(std::span<const Motions> preds, std::span<const Motions> targets,
                         const ClipPairBatch& batch, const LossConfig& cfg);

/// Analytic d(total)/d(pred), one gradient matrix per clip.
std::vector<Motions> loss_gradient(std::span<const Motions> preds, std::span<const Motions> targets,
                                   const ClipPairBatch& batch, const LossConfig& cfg);

}  // namespace voclip
