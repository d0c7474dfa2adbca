#include "voclip/model_config.hpp"

#include <stdexcept>
#include <string>

namespace voclip {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (n_frames < 1) fail("n_frames must be >= 1");
  if (channels < 1) fail("channels must be >= 1");
  if (patch < 1) fail("patch must be >= 1");
  if (height < patch || width < patch) fail("frame smaller than one patch");
  if (height % patch != 0) fail("height " + std::to_string(height) + " not divisible by patch " + std::to_string(patch));
  if (width % patch != 0) fail("width " + std::to_string(width) + " not divisible by patch " + std::to_string(patch));
  if (embed_dim < 1 || heads < 1) fail("embed_dim and heads must be >= 1");
  if (embed_dim % heads != 0) fail("embed_dim " + std::to_string(embed_dim) + " not divisible by heads " + std::to_string(heads));
  if (depth < 1) fail("depth must be >= 1");
  if (ln_eps <= 0.0) fail("ln_eps must be positive");
}

std::int64_t param_count(const ModelConfig& cfg) {
  const std::int64_t e = cfg.embed_dim;
  const std::int64_t pd = cfg.patch_dim();
  const std::int64_t attn = 4 * (e * e + e);        // q, k, v, out projections
  const std::int64_t block = 2 * e                  // temporal LN
                             + attn                 // temporal MHSA
                             + e * e + e            // FC after temporal attention
                             + 2 * e                // spatial LN
                             + attn                 // spatial MHSA
                             + 2 * e                // MLP LN
                             + e * 4 * e + 4 * e    // MLP expand
                             + 4 * e * e + e;       // MLP project
  return pd * e + e                              // patch embedding
         + static_cast<std::int64_t>(cfg.n_tokens()) * e  // positional embedding
         + static_cast<std::int64_t>(cfg.depth) * block
         + 2 * e                                 // final LN
         + e * cfg.out_dim() + cfg.out_dim();    // regression head
}

}  // namespace voclip
