#pragma once

#include <cstdint>

namespace voclip {

/// Architecture hyperparameters. The toy preset keeps a full forward and
/// backward pass in the millisecond range; the full-size preset matches the
/// deployed geometry (192x640 frames, 12 encoder blocks).
struct ModelConfig {
  int n_frames = 3;
  int channels = 3;
  int height = 32;
  int width = 64;
  int patch = 16;
  int embed_dim = 32;
  int depth = 2;
  int heads = 2;
  double ln_eps = 1e-5;

  static ModelConfig toy() { return ModelConfig{}; }
  static ModelConfig full() {
    ModelConfig c;
    c.height = 192;
    c.width = 640;
    c.embed_dim = 384;
    c.depth = 12;
    c.heads = 6;
    return c;
  }

  int n_patches() const { return (height / patch) * (width / patch); }
  int patch_dim() const { return channels * patch * patch; }
  int head_dim() const { return embed_dim / heads; }
  int n_tokens() const { return n_frames * n_patches(); }
  int out_dim() const { return 6 * (n_frames - 1); }

  void validate() const;
};

/// Total number of learned scalars, derived from the config alone.
std::int64_t param_count(const ModelConfig& cfg);

}  // namespace voclip
