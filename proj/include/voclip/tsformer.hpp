#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "voclip/adam.hpp"
#include "voclip/autodiff.hpp"
#include "voclip/clip.hpp"
#include "voclip/eager.hpp"
#include "voclip/loss.hpp"
#include "voclip/model_config.hpp"
#include "voclip/rng.hpp"
#include "voclip/se3.hpp"
#include "voclip/tensor.hpp"

// Video transformer for relative-pose regression: patch embedding, stacked
// encoder blocks with divided space-time attention (each block attends over
// time within a spatial location, then over space within a frame), and a
// pooled linear head emitting one 6-DoF motion per frame transition.

namespace voclip {

// pixel standardization applied after scaling to [0, 1]
inline constexpr double kPixelMean = 0.5;
inline constexpr double kPixelStd = 0.25;

template <typename T>
struct AttnParams {
  Parameter<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct BlockParams {
  Parameter<T> ln_t_gamma, ln_t_beta;
  AttnParams<T> attn_t;
  Parameter<T> fc_w, fc_b;  // projection of the temporal-attention branch
  Parameter<T> ln_s_gamma, ln_s_beta;
  AttnParams<T> attn_s;
  Parameter<T> ln_m_gamma, ln_m_beta;
  Parameter<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

template <typename T>
struct ModelParams {
  ModelConfig cfg;
  Parameter<T> embed_w, embed_b;
  Parameter<T> pos;  // one learned embedding per (space, time) slot
  std::vector<BlockParams<T>> blocks;
  Parameter<T> ln_f_gamma, ln_f_beta;
  Parameter<T> head_w, head_b;

  /// Seeded init: weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases
  /// zero, LN gains one. Draw order is fixed by declaration order.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  /// Every parameter in a fixed order (optimizer / checkpoint order).
  std::vector<Parameter<T>*> all();

  void zero_grads() {
    for (auto* p : all()) p->zero_grad();
  }

  std::int64_t actual_param_count() {
    std::int64_t n = 0;
    for (auto* p : all()) n += p->value.numel();
    return n;
  }
};

namespace model_detail {

template <typename T>
Parameter<T> xavier(const std::string& name, Shape shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Parameter<T>(name, Tensor<T>::uniform(std::move(shape), rng, static_cast<T>(-bound), static_cast<T>(bound)));
}

template <typename T>
Parameter<T> zeros(const std::string& name, Shape shape) {
  return Parameter<T>(name, Tensor<T>::zeros(std::move(shape)));
}

template <typename T>
Parameter<T> ones(const std::string& name, Shape shape) {
  return Parameter<T>(name, Tensor<T>::full(std::move(shape), T(1)));
}

template <typename T>
AttnParams<T> init_attn(const std::string& prefix, int e, Rng& rng) {
  AttnParams<T> a;
  a.wq = xavier<T>(prefix + ".wq", {e, e}, e, e, rng);
  a.bq = zeros<T>(prefix + ".bq", {e});
  a.wk = xavier<T>(prefix + ".wk", {e, e}, e, e, rng);
  a.bk = zeros<T>(prefix + ".bk", {e});
  a.wv = xavier<T>(prefix + ".wv", {e, e}, e, e, rng);
  a.bv = zeros<T>(prefix + ".bv", {e});
  a.wo = xavier<T>(prefix + ".wo", {e, e}, e, e, rng);
  a.bo = zeros<T>(prefix + ".bo", {e});
  return a;
}

}  // namespace model_detail

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  using namespace model_detail;
  Rng rng(seed);
  ModelParams<T> p;
  p.cfg = cfg;
  const int e = cfg.embed_dim;
  const int pd = cfg.patch_dim();
  const int tokens = cfg.n_tokens();
  p.embed_w = xavier<T>("embed.w", {pd, e}, pd, e, rng);
  p.embed_b = zeros<T>("embed.b", {e});
  p.pos = xavier<T>("pos", {tokens, e}, tokens, e, rng);
  for (int b = 0; b < cfg.depth; ++b) {
    const std::string pre = "block" + std::to_string(b);
    BlockParams<T> blk;
    blk.ln_t_gamma = ones<T>(pre + ".ln_t.g", {e});
    blk.ln_t_beta = zeros<T>(pre + ".ln_t.b", {e});
    blk.attn_t = init_attn<T>(pre + ".attn_t", e, rng);
    blk.fc_w = xavier<T>(pre + ".fc.w", {e, e}, e, e, rng);
    blk.fc_b = zeros<T>(pre + ".fc.b", {e});
    blk.ln_s_gamma = ones<T>(pre + ".ln_s.g", {e});
    blk.ln_s_beta = zeros<T>(pre + ".ln_s.b", {e});
    blk.attn_s = init_attn<T>(pre + ".attn_s", e, rng);
    blk.ln_m_gamma = ones<T>(pre + ".ln_m.g", {e});
    blk.ln_m_beta = zeros<T>(pre + ".ln_m.b", {e});
    blk.mlp_w1 = xavier<T>(pre + ".mlp.w1", {e, 4 * e}, e, 4 * e, rng);
    blk.mlp_b1 = zeros<T>(pre + ".mlp.b1", {4 * e});
    blk.mlp_w2 = xavier<T>(pre + ".mlp.w2", {4 * e, e}, 4 * e, e, rng);
    blk.mlp_b2 = zeros<T>(pre + ".mlp.b2", {e});
    p.blocks.push_back(std::move(blk));
  }
  p.ln_f_gamma = ones<T>("ln_f.g", {e});
  p.ln_f_beta = zeros<T>("ln_f.b", {e});
  const int out = cfg.out_dim();
  p.head_w = xavier<T>("head.w", {e, out}, e, out, rng);
  p.head_b = zeros<T>("head.b", {out});
  return p;
}

template <typename T>
std::vector<Parameter<T>*> ModelParams<T>::all() {
  std::vector<Parameter<T>*> out;
  out.push_back(&embed_w);
  out.push_back(&embed_b);
  out.push_back(&pos);
  for (auto& b : blocks) {
    out.push_back(&b.ln_t_gamma);
    out.push_back(&b.ln_t_beta);
    for (auto* a : {&b.attn_t}) {
      out.push_back(&a->wq);
      out.push_back(&a->bq);
      out.push_back(&a->wk);
      out.push_back(&a->bk);
      out.push_back(&a->wv);
      out.push_back(&a->bv);
      out.push_back(&a->wo);
      out.push_back(&a->bo);
    }
    out.push_back(&b.fc_w);
    out.push_back(&b.fc_b);
    out.push_back(&b.ln_s_gamma);
    out.push_back(&b.ln_s_beta);
    for (auto* a : {&b.attn_s}) {
      out.push_back(&a->wq);
      out.push_back(&a->bq);
      out.push_back(&a->wk);
      out.push_back(&a->bk);
      out.push_back(&a->wv);
      out.push_back(&a->bv);
      out.push_back(&a->wo);
      out.push_back(&a->bo);
    }
    out.push_back(&b.ln_m_gamma);
    out.push_back(&b.ln_m_beta);
    out.push_back(&b.mlp_w1);
    out.push_back(&b.mlp_b1);
    out.push_back(&b.mlp_w2);
    out.push_back(&b.mlp_b2);
  }
  out.push_back(&ln_f_gamma);
  out.push_back(&ln_f_beta);
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

// ---- patch handling ----

/// (n_frames, C, H, W) -> (n_frames, N, C*P*P); each patch is flattened
/// row-major over (channel, py, px).
template <typename T>
Tensor<T> patchify(const Tensor<T>& frames, int patch) {
  if (frames.rank() != 4) throw std::invalid_argument("patchify: expected (frames, channels, height, width), got " + shape_str(frames.shape));
  const std::int64_t F = frames.dim(0), C = frames.dim(1), H = frames.dim(2), W = frames.dim(3);
  if (H % patch != 0 || W % patch != 0) {
    throw std::invalid_argument("patchify: dims " + shape_str(frames.shape) + " not divisible by patch " + std::to_string(patch));
  }
  const std::int64_t gy = H / patch, gx = W / patch, n = gy * gx;
  const std::int64_t pd = C * patch * patch;
  Tensor<T> out({F, n, pd});
  for (std::int64_t f = 0; f < F; ++f) {
    for (std::int64_t py = 0; py < gy; ++py) {
      for (std::int64_t px = 0; px < gx; ++px) {
        const std::int64_t pi = py * gx + px;
        T* dst = out.ptr() + (f * n + pi) * pd;
        for (std::int64_t c = 0; c < C; ++c) {
          for (std::int64_t y = 0; y < patch; ++y) {
            const T* src = frames.ptr() + ((f * C + c) * H + py * patch + y) * W + px * patch;
            for (std::int64_t x = 0; x < patch; ++x) *dst++ = src[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, int channels, int height, int width, int patch) {
  if (patches.rank() != 3) throw std::invalid_argument("unpatchify: expected (frames, patches, patch_dim), got " + shape_str(patches.shape));
  const std::int64_t F = patches.dim(0);
  const std::int64_t gy = height / patch, gx = width / patch;
  if (patches.dim(1) != gy * gx || patches.dim(2) != static_cast<std::int64_t>(channels) * patch * patch) {
    throw std::invalid_argument("unpatchify: shape " + shape_str(patches.shape) + " inconsistent with frame geometry");
  }
  Tensor<T> out({F, channels, height, width});
  const std::int64_t pd = patches.dim(2);
  for (std::int64_t f = 0; f < F; ++f) {
    for (std::int64_t py = 0; py < gy; ++py) {
      for (std::int64_t px = 0; px < gx; ++px) {
        const T* src = patches.ptr() + (f * gy * gx + py * gx + px) * pd;
        for (std::int64_t c = 0; c < channels; ++c) {
          for (std::int64_t y = 0; y < patch; ++y) {
            T* dst = out.ptr() + ((f * channels + c) * height + py * patch + y) * width + px * patch;
            for (std::int64_t x = 0; x < patch; ++x) dst[x] = *src++;
          }
        }
      }
    }
  }
  return out;
}

/// Gathers a clip's frames into one (n_frames, C, H, W) tensor, scaling
/// pixels are assumed in [0, 1] and standardized with the fixed mean/std.
template <typename T>
Tensor<T> make_clip_tensor(std::span<const Tensor<double>> all_frames, const Clip& clip, const ModelConfig& cfg) {
  if (clip.start < 0 || clip.start + clip.n_frames > static_cast<std::int64_t>(all_frames.size())) {
    throw std::invalid_argument("make_clip_tensor: clip frames out of range");
  }
  Tensor<T> out({clip.n_frames, cfg.channels, cfg.height, cfg.width});
  const std::int64_t per = static_cast<std::int64_t>(cfg.channels) * cfg.height * cfg.width;
  for (int f = 0; f < clip.n_frames; ++f) {
    const Tensor<double>& fr = all_frames[static_cast<std::size_t>(clip.start + f)];
    if (fr.numel() != per) throw std::invalid_argument("make_clip_tensor: frame size mismatch");
    for (std::int64_t i = 0; i < per; ++i) {
      out.data[f * per + i] = static_cast<T>((fr.data[i] - kPixelMean) / kPixelStd);
    }
  }
  return out;
}

// ---- execution backends ----

/// Records onto a tape for training. Parameters are leased once per graph.
template <typename T>
struct GraphBackend {
  using Handle = Var;
  Graph<T>& g;

  explicit GraphBackend(Graph<T>& graph) : g(graph) {}

  Handle param(Parameter<T>& p) {
    auto it = cache_.find(&p);
    if (it != cache_.end()) return it->second;
    Var v = g.param(p);
    cache_.emplace(&p, v);
    return v;
  }
  Handle input(Tensor<T> t, bool requires_grad) { return g.leaf(std::move(t), requires_grad); }
  const Tensor<T>& value(Handle h) const { return g.val(h); }

  Handle add(Handle a, Handle b) { return voclip::add(g, a, b); }
  Handle scale(Handle a, T s) { return voclip::scale(g, a, s); }
  Handle gelu(Handle a) { return voclip::gelu(g, a); }
  Handle add_rowvec(Handle x, Handle v) { return voclip::add_rowvec(g, x, v); }
  Handle mul_rowvec(Handle x, Handle v) { return voclip::mul_rowvec(g, x, v); }
  Handle bmm(Handle a, Handle b) { return voclip::bmm(g, a, b); }
  Handle transpose01(Handle x) { return voclip::transpose01(g, x); }
  Handle transpose12(Handle x) { return voclip::transpose12(g, x); }
  Handle reshape(Handle a, Shape s) { return voclip::reshape(g, a, std::move(s)); }
  Handle slice_last(Handle a, std::int64_t c0, std::int64_t c1) { return voclip::slice_last(g, a, c0, c1); }
  Handle concat_last(const std::vector<Handle>& parts) { return voclip::concat_last(g, parts); }
  Handle softmax_last(Handle a) { return voclip::softmax_last(g, a); }
  Handle layer_norm_last(Handle a, T eps) { return voclip::layer_norm_last(g, a, eps); }
  Handle mean_rows(Handle a) { return voclip::mean_rows(g, a); }
  Handle linear(Handle x, Handle w, Handle b) { return voclip::linear(g, x, w, b); }

 private:
  std::unordered_map<Parameter<T>*, Var> cache_;
};

/// Computes values directly; nothing is retained, so memory stays flat.
template <typename T>
struct EagerBackend {
  using Handle = Tensor<T>;

  Handle param(Parameter<T>& p) { return p.value; }
  Handle input(Tensor<T> t, bool) { return t; }
  const Tensor<T>& value(const Handle& h) const { return h; }

  Handle add(const Handle& a, const Handle& b) { return eager::add(a, b); }
  Handle scale(const Handle& a, T s) { return eager::scale(a, s); }
  Handle gelu(const Handle& a) { return eager::gelu(a); }
  Handle add_rowvec(const Handle& x, const Handle& v) { return eager::add_rowvec(x, v); }
  Handle mul_rowvec(const Handle& x, const Handle& v) { return eager::mul_rowvec(x, v); }
  Handle bmm(const Handle& a, const Handle& b) { return eager::bmm(a, b); }
  Handle transpose01(const Handle& x) { return eager::transpose01(x); }
  Handle transpose12(const Handle& x) { return eager::transpose12(x); }
  Handle reshape(const Handle& a, Shape s) { return eager::reshape(a, std::move(s)); }
  Handle slice_last(const Handle& a, std::int64_t c0, std::int64_t c1) { return eager::slice_last(a, c0, c1); }
  Handle concat_last(const std::vector<Handle>& parts) {
    std::vector<const Tensor<T>*> ptrs;
    ptrs.reserve(parts.size());
    for (const auto& p : parts) ptrs.push_back(&p);
    return eager::concat_last(ptrs);
  }
  Handle softmax_last(const Handle& a) { return eager::softmax_last(a); }
  Handle layer_norm_last(const Handle& a, T eps) { return eager::layer_norm_last(a, eps); }
  Handle mean_rows(const Handle& a) { return eager::mean_rows(a); }
  Handle linear(const Handle& x, const Handle& w, const Handle& b) {
    Shape out_shape = x.shape;
    out_shape.back() = w.dim(1);
    Tensor<T> x2 = eager::reshape(x, {x.rows_flat(), x.cols()});
    Tensor<T> y = eager::add_rowvec(eager::matmul(x2, w), b);
    return eager::reshape(y, std::move(out_shape));
  }
};

// ---- forward ----

namespace model_detail {

template <typename T, typename B>
typename B::Handle ln_affine(B& bk, typename B::Handle x, Parameter<T>& gamma, Parameter<T>& beta, T eps) {
  return bk.add_rowvec(bk.mul_rowvec(bk.layer_norm_last(x, eps), bk.param(gamma)), bk.param(beta));
}

/// Multi-head self-attention over a (groups, seq, embed) handle; every group
/// is an independent attention sequence.
template <typename T, typename B>
typename B::Handle mhsa(B& bk, AttnParams<T>& p, typename B::Handle x, int heads) {
  const std::int64_t e = bk.value(x).cols();
  const std::int64_t d = e / heads;
  auto q = bk.linear(x, bk.param(p.wq), bk.param(p.bq));
  auto k = bk.linear(x, bk.param(p.wk), bk.param(p.bk));
  auto v = bk.linear(x, bk.param(p.wv), bk.param(p.bv));
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  std::vector<typename B::Handle> head_outs;
  head_outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    auto qh = bk.slice_last(q, h * d, (h + 1) * d);
    auto kh = bk.slice_last(k, h * d, (h + 1) * d);
    auto vh = bk.slice_last(v, h * d, (h + 1) * d);
    auto scores = bk.scale(bk.bmm(qh, bk.transpose12(kh)), inv_sqrt_d);
    head_outs.push_back(bk.bmm(bk.softmax_last(scores), vh));
  }
  auto cat = bk.concat_last(head_outs);
  return bk.linear(cat, bk.param(p.wo), bk.param(p.bo));
}

/// One divided space-time encoder block on a (n_frames, N, E) token grid:
/// temporal attention within each spatial index, its FC projection added
/// back residually, spatial attention within each frame, then the MLP.
/// Zeroing fc, spatial wo/bo and mlp w2/b2 makes the block the identity.
template <typename T, typename B>
typename B::Handle encoder_block(B& bk, BlockParams<T>& p, typename B::Handle z, const ModelConfig& cfg) {
  const T eps = static_cast<T>(cfg.ln_eps);
  // temporal: tokens sharing a spatial index form sequences over time
  auto t_in = bk.transpose01(z);  // (N, n_frames, E)
  auto t_attn = mhsa<T>(bk, p.attn_t, ln_affine<T>(bk, t_in, p.ln_t_gamma, p.ln_t_beta, eps), cfg.heads);
  auto t_proj = bk.linear(t_attn, bk.param(p.fc_w), bk.param(p.fc_b));
  auto u = bk.add(z, bk.transpose01(t_proj));
  // spatial: tokens of the same frame attend to each other
  auto s_attn = mhsa<T>(bk, p.attn_s, ln_affine<T>(bk, u, p.ln_s_gamma, p.ln_s_beta, eps), cfg.heads);
  auto v = bk.add(u, s_attn);
  auto m = bk.linear(bk.gelu(bk.linear(ln_affine<T>(bk, v, p.ln_m_gamma, p.ln_m_beta, eps), bk.param(p.mlp_w1), bk.param(p.mlp_b1))), bk.param(p.mlp_w2), bk.param(p.mlp_b2));
  return bk.add(v, m);
}

}  // namespace model_detail

/// Full forward pass from a patch handle of shape (n_frames, N, patch_dim)
/// to predicted motions of shape (n_frames - 1, 6).
template <typename T, typename B>
typename B::Handle forward_from_patches(B& bk, ModelParams<T>& params, typename B::Handle patches) {
  const ModelConfig& cfg = params.cfg;
  const std::int64_t tokens = cfg.n_tokens();
  const std::int64_t e = cfg.embed_dim;
  auto x = bk.linear(patches, bk.param(params.embed_w), bk.param(params.embed_b));
  auto x2 = bk.reshape(x, {tokens, e});
  x2 = bk.add(x2, bk.param(params.pos));
  auto grid = bk.reshape(x2, {cfg.n_frames, cfg.n_patches(), e});
  for (auto& blk : params.blocks) {
    grid = model_detail::encoder_block<T>(bk, blk, grid, cfg);
  }
  auto flat = bk.reshape(grid, {tokens, e});
  flat = model_detail::ln_affine<T>(bk, flat, params.ln_f_gamma, params.ln_f_beta, static_cast<T>(cfg.ln_eps));
  auto pooled = bk.mean_rows(flat);
  auto out = bk.linear(pooled, bk.param(params.head_w), bk.param(params.head_b));
  return bk.reshape(out, {cfg.n_frames - 1, 6});
}

/// Inference: clip frames (n_frames, C, H, W) -> motions, no tape.
template <typename T>
Tensor<T> forward_eager(ModelParams<T>& params, const Tensor<T>& clip_frames) {
  EagerBackend<T> bk;
  return forward_from_patches<T>(bk, params, patchify(clip_frames, params.cfg.patch));
}

template <typename T>
Motions motions_from_tensor(const Tensor<T>& t) {
  if (t.rank() != 2 || t.dim(1) != 6) throw std::invalid_argument("motions_from_tensor: expected (n, 6), got " + shape_str(t.shape));
  Motions out(static_cast<std::size_t>(t.dim(0)));
  for (std::int64_t w = 0; w < t.dim(0); ++w) {
    for (int d = 0; d < 6; ++d) out[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)] = static_cast<double>(t.data[w * 6 + d]);
  }
  return out;
}

// ---- training ----

/// Builds the batch loss on the tape: MSE averaged over clips plus
/// alpha * consistency over the batch's pairs (matching the standalone loss
/// implementations).
template <typename T>
Var graph_total_loss(Graph<T>& g, const std::vector<Var>& preds, std::span<const Motions> targets,
                     const ClipPairBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  if (preds.size() != batch.n_clips() || targets.size() != preds.size()) {
    throw std::invalid_argument("graph_total_loss: prediction/target/batch sizes disagree");
  }
  const int n_frames = batch.first_half[0].n_frames;
  const std::size_t n_clips = preds.size();

  Var mse;
  for (std::size_t c = 0; c < n_clips; ++c) {
    Tensor<T> tgt({n_frames - 1, 6});
    for (int w = 0; w < n_frames - 1; ++w) {
      for (int d = 0; d < 6; ++d) tgt.data[w * 6 + d] = static_cast<T>(targets[c][static_cast<std::size_t>(w)][static_cast<std::size_t>(d)]);
    }
    Var diff = sub(g, preds[c], g.constant(std::move(tgt)));
    Var term = scale(g, sum_all(g, mul(g, diff, diff)), T(1) / static_cast<T>(n_frames - 1));
    mse = c == 0 ? term : add(g, mse, term);
  }
  mse = scale(g, mse, T(1) / static_cast<T>(n_clips));

  if (cfg.alpha == 0.0) return mse;

  const std::size_t n_pairs = batch.n_pairs();
  Var mc;
  bool have_mc = false;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::size_t newer = n_pairs + i;
    const std::size_t older = i;
    for (int j = 1; j <= n_frames - 2; ++j) {
      const std::int64_t w_new = n_frames - 2 - j;
      const std::int64_t w_old = w_new + 1;
      Var d = sub(g, slice_first(g, preds[newer], w_new, w_new + 1), slice_first(g, preds[older], w_old, w_old + 1));
      Var term = sum_all(g, mul(g, d, d));
      mc = have_mc ? add(g, mc, term) : term;
      have_mc = true;
    }
  }
  if (!have_mc) return mse;
  if (cfg.mc_reduction == McReduction::Mean) mc = scale(g, mc, T(1) / static_cast<T>(n_pairs));
  return add(g, mse, scale(g, mc, static_cast<T>(cfg.alpha)));
}

/// One optimization step over a clip-pair batch. clip_tensors follow
/// ClipPairBatch::clips() order. Returns the loss breakdown recomputed in
/// double precision from the forward predictions.
template <typename T>
LossBreakdown train_step(ModelParams<T>& params, const ClipPairBatch& batch,
                         std::span<const Tensor<T>> clip_tensors, std::span<const Motions> targets,
                         const LossConfig& loss_cfg, AdamState<T>& opt_state, const AdamConfig& opt_cfg) {
  batch.validate();
  if (clip_tensors.size() != batch.n_clips()) {
    throw std::invalid_argument("train_step: clip tensor count does not match batch");
  }
  Graph<T> g;
  GraphBackend<T> bk(g);
  std::vector<Var> preds;
  preds.reserve(clip_tensors.size());
  for (const auto& ct : clip_tensors) {
    Var patches = bk.input(patchify(ct, params.cfg.patch), false);
    preds.push_back(forward_from_patches<T>(bk, params, patches));
  }
  Var total = graph_total_loss(g, preds, targets, batch, loss_cfg);

  params.zero_grads();
  g.backward(total);
  auto plist = params.all();
  adam_step(plist, opt_state, opt_cfg);

  std::vector<Motions> pred_motions;
  pred_motions.reserve(preds.size());
  for (Var p : preds) pred_motions.push_back(motions_from_tensor(g.val(p)));
  return total_loss(pred_motions, targets, batch, loss_cfg);
}

/// Slides a clip window over the frame sequence (stride 1), averages the
/// per-motion estimates across overlapping clips, and integrates the result
/// into an absolute trajectory anchored at the identity.
template <typename T>
Trajectory predict_trajectory(ModelParams<T>& params, std::span<const Tensor<double>> frames) {
  const int n_frames = params.cfg.n_frames;
  const std::int64_t L = static_cast<std::int64_t>(frames.size());
  if (L < n_frames) throw std::invalid_argument("predict_trajectory: need at least one full clip");
  std::vector<Vec6> sums(static_cast<std::size_t>(L - 1), Vec6{});
  std::vector<int> counts(static_cast<std::size_t>(L - 1), 0);
  for (std::int64_t s = 0; s + n_frames <= L; ++s) {
    const Clip clip{s, n_frames};
    Tensor<T> ct = make_clip_tensor<T>(frames, clip, params.cfg);
    const Motions m = motions_from_tensor(forward_eager(params, ct));
    for (int w = 0; w < n_frames - 1; ++w) {
      const std::size_t gi = static_cast<std::size_t>(clip.motion_index(w) - 1);
      for (int d = 0; d < 6; ++d) sums[gi][static_cast<std::size_t>(d)] += m[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)];
      counts[gi] += 1;
    }
  }
  std::vector<Pose6DoF> motions(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    Vec6 avg{};
    for (int d = 0; d < 6; ++d) avg[static_cast<std::size_t>(d)] = counts[i] > 0 ? sums[i][static_cast<std::size_t>(d)] / counts[i] : 0.0;
    motions[i] = Pose6DoF::from_flat(avg);
  }
  return relative_to_absolute(motions);
}

}  // namespace voclip
