#include "voclip/clip.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "voclip/rng.hpp"

namespace voclip {

void SamplerConfig::validate() const {
  if (n_frames < 2) throw std::invalid_argument("sampler: n_frames must be >= 2, got " + std::to_string(n_frames));
  if (stride < 1) throw std::invalid_argument("sampler: stride must be >= 1, got " + std::to_string(stride));
  if (batch_size < 1) throw std::invalid_argument("sampler: batch_size must be >= 1, got " + std::to_string(batch_size));
}

std::vector<Clip> ClipPairBatch::clips() const {
  std::vector<Clip> out;
  out.reserve(n_clips());
  out.insert(out.end(), first_half.begin(), first_half.end());
  out.insert(out.end(), second_half.begin(), second_half.end());
  return out;
}

void ClipPairBatch::validate() const {
  if (first_half.size() != second_half.size()) {
    throw std::invalid_argument("batch: halves differ in size");
  }
  for (std::size_t i = 0; i < first_half.size(); ++i) {
    if (second_half[i].start != first_half[i].start + 1 || second_half[i].n_frames != first_half[i].n_frames) {
      throw std::invalid_argument("batch: pair " + std::to_string(i) + " clips are not consecutive");
    }
  }
}

SampleResult sample_clip_pairs(std::int64_t sequence_length, const SamplerConfig& cfg) {
  cfg.validate();
  SampleResult res;
  const std::int64_t last_start = sequence_length - cfg.n_frames - 1;
  if (last_start < 0) {
    res.sequence_too_short = true;
    return res;
  }
  for (std::int64_t s = 0; s <= last_start; s += cfg.stride) {
    res.pairs.push_back(ClipPair{Clip{s, cfg.n_frames}, Clip{s + 1, cfg.n_frames}});
  }
  return res;
}

std::vector<ClipPairBatch> assemble_batches(const std::vector<ClipPair>& pairs, const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<ClipPair> shuffled = pairs;
  Rng rng(cfg.shuffle_seed);
  rng.shuffle(shuffled);

  std::vector<ClipPairBatch> batches;
  for (std::size_t i = 0; i < shuffled.size(); i += static_cast<std::size_t>(cfg.batch_size)) {
    ClipPairBatch b;
    const std::size_t end = std::min(shuffled.size(), i + static_cast<std::size_t>(cfg.batch_size));
    for (std::size_t j = i; j < end; ++j) {
      b.first_half.push_back(shuffled[j].first);
      b.second_half.push_back(shuffled[j].second);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

OverlapMap overlap_map(const ClipPairBatch& batch) {
  OverlapMap map;
  const std::vector<Clip> clips = batch.clips();
  map.pair_of_clip.resize(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    map.pair_of_clip[i] = batch.pair_of(i);
    for (int w = 0; w < clips[i].n_motions(); ++w) {
      map.entries[clips[i].motion_index(w)].push_back(OverlapMap::Occurrence{i, w});
    }
  }
  return map;
}

std::vector<Pose6DoF> ground_truth_targets(const Clip& clip, const Trajectory& gt) {
  if (clip.start < 0 || clip.start + clip.n_frames > static_cast<std::int64_t>(gt.size())) {
    throw std::invalid_argument("ground_truth_targets: clip frames [" + std::to_string(clip.start) + ", " +
                                std::to_string(clip.start + clip.n_frames) + ") exceed trajectory of length " +
                                std::to_string(gt.size()));
  }
  std::vector<Pose6DoF> targets;
  targets.reserve(static_cast<std::size_t>(clip.n_motions()));
  for (int w = 0; w < clip.n_motions(); ++w) {
    const std::size_t a = static_cast<std::size_t>(clip.frame_index(w));
    targets.push_back(transform_to_pose(compose(invert(gt.poses[a]), gt.poses[a + 1])));
  }
  return targets;
}

}  // namespace voclip
