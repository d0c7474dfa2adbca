#include "voclip/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace voclip {

namespace {

double sq_diff6(const Vec6& a, const Vec6& b) {
  double s = 0.0;
  for (int d = 0; d < 6; ++d) {
    const double e = a[d] - b[d];
    s += e * e;
  }
  return s;
}

void check_rows(std::span<const Motions> preds, int n_frames, const char* who) {
  for (std::size_t c = 0; c < preds.size(); ++c) {
    if (static_cast<int>(preds[c].size()) != n_frames - 1) {
      throw std::invalid_argument(std::string(who) + ": clip " + std::to_string(c) + " has " +
                                  std::to_string(preds[c].size()) + " motion rows, expected " +
                                  std::to_string(n_frames - 1));
    }
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("loss: alpha must be >= 0, got " + std::to_string(alpha));
}

double mse_loss(std::span<const Motions> preds, std::span<const Motions> targets) {
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("mse_loss: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(targets.size()) + " targets");
  }
  if (preds.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < preds.size(); ++c) {
    if (preds[c].size() != targets[c].size() || preds[c].empty()) {
      throw std::invalid_argument("mse_loss: clip " + std::to_string(c) + " row count mismatch (" +
                                  std::to_string(preds[c].size()) + " vs " + std::to_string(targets[c].size()) + ")");
    }
    double clip_sum = 0.0;
    for (std::size_t w = 0; w < preds[c].size(); ++w) clip_sum += sq_diff6(preds[c][w], targets[c][w]);
    acc += clip_sum / static_cast<double>(preds[c].size());
  }
  return acc / static_cast<double>(preds.size());
}

double mc_group_closed(std::span<const Motions> group, int n_frames, std::int64_t* n_terms) {
  if (n_terms) *n_terms = 0;
  if (n_frames < 3 || group.size() < 2) return 0.0;
  check_rows(group, n_frames, "mc_group_closed");
  const int g_max = static_cast<int>(group.size()) - 1;
  double acc = 0.0;
  // Motion offset j runs over every motion shared by at least two clips of
  // the group; m < n pick the two clips. Local slot of motion j in clip m is
  // n_frames - 2 - j + m.
  for (int j = 1; j <= 2 * n_frames - 5; ++j) {
    const int mu = std::max(j - n_frames + 2, 0);
    const int lambda = std::min({n_frames - 3, j - 1, g_max - 1});
    const int gamma = std::min({n_frames - 2, j, g_max});
    for (int m = mu; m <= lambda; ++m) {
      for (int n = m + 1; n <= gamma; ++n) {
        const int wm = n_frames - 2 - j + m;
        const int wn = n_frames - 2 - j + n;
        acc += sq_diff6(group[static_cast<std::size_t>(m)][static_cast<std::size_t>(wm)],
                        group[static_cast<std::size_t>(n)][static_cast<std::size_t>(wn)]);
        if (n_terms) ++*n_terms;
      }
    }
  }
  return acc;
}

double mc_loss_closed(std::span<const Motions> preds, const ClipPairBatch& batch,
                      McReduction reduction, std::int64_t* n_terms) {
  batch.validate();
  if (n_terms) *n_terms = 0;
  const std::size_t n_pairs = batch.n_pairs();
  if (n_pairs == 0) return 0.0;
  if (preds.size() != batch.n_clips()) {
    throw std::invalid_argument("mc_loss_closed: " + std::to_string(preds.size()) + " predictions for " +
                                std::to_string(batch.n_clips()) + " clips");
  }
  const int n_frames = batch.first_half[0].n_frames;
  double acc = 0.0;
  std::int64_t terms = 0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    // newest clip first: the second clip of the pair ends one frame later
    const Motions group[2] = {preds[n_pairs + i], preds[i]};
    std::int64_t t = 0;
    acc += mc_group_closed(std::span<const Motions>(group, 2), n_frames, &t);
    terms += t;
  }
  if (n_terms) *n_terms = terms;
  if (reduction == McReduction::Mean) acc /= static_cast<double>(n_pairs);
  return acc;
}

double mc_loss_oracle(const OverlapMap& map, std::span<const Motions> preds,
                      McReduction reduction, std::size_t n_pairs_in_batch) {
  auto pair_id = [&](std::size_t clip) -> std::size_t {
    if (map.pair_of_clip.empty()) return 0;  // hand-built map: one group
    return map.pair_of_clip.at(clip);
  };
  std::size_t n_pairs = n_pairs_in_batch;
  if (n_pairs == 0) {
    if (map.pair_of_clip.empty()) {
      n_pairs = 1;
    } else {
      for (std::size_t p : map.pair_of_clip) n_pairs = std::max(n_pairs, p + 1);
    }
  }
  double acc = 0.0;
  for (const auto& [motion, occurrences] : map.entries) {
    (void)motion;
    for (std::size_t a = 0; a < occurrences.size(); ++a) {
      for (std::size_t b = a + 1; b < occurrences.size(); ++b) {
        const auto& oa = occurrences[a];
        const auto& ob = occurrences[b];
        if (pair_id(oa.clip) != pair_id(ob.clip)) continue;
        if (oa.clip >= preds.size() || ob.clip >= preds.size() ||
            oa.w >= static_cast<int>(preds[oa.clip].size()) || ob.w >= static_cast<int>(preds[ob.clip].size())) {
          throw std::invalid_argument("mc_loss_oracle: prediction missing for clip " +
                                      std::to_string(std::max(oa.clip, ob.clip)));
        }
        acc += sq_diff6(preds[oa.clip][static_cast<std::size_t>(oa.w)],
                        preds[ob.clip][static_cast<std::size_t>(ob.w)]);
      }
    }
  }
  if (reduction == McReduction::Mean && n_pairs > 0) acc /= static_cast<double>(n_pairs);
  return acc;
}

LossBreakdown total_loss(std::span<const Motions> preds, std::span<const Motions> targets,
                         const ClipPairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  LossBreakdown out;
  out.mse = mse_loss(preds, targets);
  out.mc = mc_loss_closed(preds, batch, cfg.mc_reduction, &out.n_consistency_pairs);
  out.total = out.mse + cfg.alpha * out.mc;
  return out;
}

std::vector<Motions> loss_gradient(std::span<const Motions> preds, std::span<const Motions> targets,
                                   const ClipPairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  if (preds.size() != targets.size() || preds.size() != batch.n_clips()) {
    throw std::invalid_argument("loss_gradient: prediction/target/batch sizes disagree");
  }
  std::vector<Motions> grads(preds.size());
  for (std::size_t c = 0; c < preds.size(); ++c) grads[c].assign(preds[c].size(), Vec6{});
  if (preds.empty()) return grads;

  const std::size_t n_clips = preds.size();
  for (std::size_t c = 0; c < n_clips; ++c) {
    if (preds[c].size() != targets[c].size()) {
      throw std::invalid_argument("loss_gradient: clip " + std::to_string(c) + " row count mismatch");
    }
    const double f = 2.0 / (static_cast<double>(preds[c].size()) * static_cast<double>(n_clips));
    for (std::size_t w = 0; w < preds[c].size(); ++w) {
      for (int d = 0; d < 6; ++d) grads[c][w][d] += f * (preds[c][w][d] - targets[c][w][d]);
    }
  }

  const std::size_t n_pairs = batch.n_pairs();
  if (cfg.alpha > 0.0 && n_pairs > 0) {
    const int n_frames = batch.first_half[0].n_frames;
    const double red = cfg.mc_reduction == McReduction::Mean ? 1.0 / static_cast<double>(n_pairs) : 1.0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
      const std::size_t newer = n_pairs + i;  // second clip of the pair
      const std::size_t older = i;
      for (int j = 1; j <= n_frames - 2; ++j) {
        const std::size_t w_new = static_cast<std::size_t>(n_frames - 2 - j);
        const std::size_t w_old = w_new + 1;
        for (int d = 0; d < 6; ++d) {
          const double diff = preds[newer][w_new][d] - preds[older][w_old][d];
          grads[newer][w_new][d] += 2.0 * cfg.alpha * red * diff;
          grads[older][w_old][d] -= 2.0 * cfg.alpha * red * diff;
        }
      }
    }
  }
  return grads;
}

}  // namespace voclip
