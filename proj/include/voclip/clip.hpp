#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "voclip/se3.hpp"

namespace voclip {

struct SamplerConfig {
  int n_frames = 3;       // frames per clip, >= 2
  int stride = 1;         // window start step, >= 1
  int batch_size = 2;     // pairs per batch, >= 1
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

/// A window of consecutive frames. Motion w (w = 0..n-2) moves frame w to
/// frame w+1 and is identified globally by the index of its target frame.
struct Clip {
  std::int64_t start = 0;
  int n_frames = 0;

  std::int64_t frame_index(int w) const { return start + w; }
  std::int64_t motion_index(int w) const { return start + w + 1; }
  int n_motions() const { return n_frames - 1; }
  bool operator==(const Clip&) const = default;
};

/// Two consecutive clips shifted by one frame; they share n_frames - 1
/// frames and n_frames - 2 motions.
struct ClipPair {
  Clip first;
  Clip second;
  bool operator==(const ClipPair&) const = default;
};

struct SampleResult {
  std::vector<ClipPair> pairs;
  bool sequence_too_short = false;
};

/// A batch of pairs laid out for concatenated processing: clip i of
/// clips() belongs to pair (i % n_pairs), first halves before second halves.
struct ClipPairBatch {
  std::vector<Clip> first_half;
  std::vector<Clip> second_half;

  std::size_t n_pairs() const { return first_half.size(); }
  std::size_t n_clips() const { return first_half.size() + second_half.size(); }
  /// Concatenated clip list in processing order.
  std::vector<Clip> clips() const;
  /// Pair index of clip position i in clips() order.
  std::size_t pair_of(std::size_t i) const { return i < n_pairs() ? i : i - n_pairs(); }

  void validate() const;
};

/// Where each motion index shows up in a batch: (clip position, local w)
/// occurrences plus the pair each clip belongs to. The consistency loss only
/// couples occurrences that fall inside the same pair.
struct OverlapMap {
  struct Occurrence {
    std::size_t clip = 0;  // position in ClipPairBatch::clips() order
    int w = 0;             // local motion slot within that clip
    bool operator==(const Occurrence&) const = default;
  };
  std::map<std::int64_t, std::vector<Occurrence>> entries;
  std::vector<std::size_t> pair_of_clip;
};

/// One pair per window start s (stepping by cfg.stride):
/// ([s .. s+n-1], [s+1 .. s+n]). Sequences shorter than n_frames + 1 yield
/// an empty list with the warning flag set.
SampleResult sample_clip_pairs(std::int64_t sequence_length, const SamplerConfig& cfg);

/// Shuffles pairs with the seeded deterministic PRNG and groups them into
/// batches of cfg.batch_size (last partial batch kept).
std::vector<ClipPairBatch> assemble_batches(const std::vector<ClipPair>& pairs, const SamplerConfig& cfg);

/// All (clip, w) occurrences of every motion index present in the batch.
OverlapMap overlap_map(const ClipPairBatch& batch);

/// Relative ground-truth motions for the clip's n_frames - 1 transitions.
std::vector<Pose6DoF> ground_truth_targets(const Clip& clip, const Trajectory& gt);

}  // namespace voclip
