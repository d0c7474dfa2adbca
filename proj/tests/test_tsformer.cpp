#include <doctest.h>

#include <cmath>

#include "voclip/io.hpp"
#include "voclip/ref_kernels.hpp"
#include "voclip/rng.hpp"
#include "voclip/tsformer.hpp"

using namespace voclip;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.n_frames = 3;
  cfg.channels = 1;
  cfg.height = 16;
  cfg.width = 32;
  cfg.patch = 16;  // N = 2
  cfg.embed_dim = 8;
  cfg.depth = 2;
  cfg.heads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("patchify shapes and round trip") {
  Rng rng(31);
  // H = W = P: one patch holding the whole frame
  Tensor<double> one({2, 3, 16, 16});
  for (auto& v : one.data) v = rng.uniform();
  const Tensor<double> p1 = patchify(one, 16);
  CHECK(p1.shape == Shape{2, 1, 3 * 16 * 16});

  // full-size geometry: 192 x 640 with P = 16 -> 480 patches
  ModelConfig full = ModelConfig::full();
  CHECK(full.n_patches() == 480);

  Tensor<double> x({3, 2, 32, 48});
  for (auto& v : x.data) v = rng.uniform();
  const Tensor<double> p = patchify(x, 16);
  CHECK(p.shape == Shape{3, 2 * 3, 2 * 16 * 16});
  const Tensor<double> back = unpatchify(p, 2, 32, 48, 16);
  CHECK(max_abs_diff(x, back) == 0.0);

  Tensor<double> bad({1, 1, 30, 32});
  CHECK_THROWS_AS(patchify(bad, 16), std::invalid_argument);
}

TEST_CASE("embedding layer contract") {
  const ModelConfig cfg = tiny_config();
  ModelParams<double> params = ModelParams<double>::init(cfg, 7);

  // zero patches and zero positional embedding give zero tokens
  {
    ModelParams<double> zp = ModelParams<double>::init(cfg, 7);
    for (auto& v : zp.pos.value.data) v = 0.0;
    for (auto& v : zp.embed_b.value.data) v = 0.0;
    EagerBackend<double> bk;
    Tensor<double> patches = Tensor<double>::zeros({cfg.n_frames, cfg.n_patches(), cfg.patch_dim()});
    auto x = bk.linear(patches, zp.embed_w.value, zp.embed_b.value);
    auto x2 = eager::add(eager::reshape(x, {cfg.n_tokens(), cfg.embed_dim}), zp.pos.value);
    for (double v : x2.data) CHECK(v == 0.0);
  }

  // identical patch content at two slots differs exactly by the pos-emb delta
  {
    Rng rng(32);
    Tensor<double> patches({cfg.n_frames, cfg.n_patches(), cfg.patch_dim()});
    std::vector<double> content(static_cast<std::size_t>(cfg.patch_dim()));
    for (auto& v : content) v = rng.normal();
    for (std::int64_t s = 0; s < cfg.n_frames * cfg.n_patches(); ++s) {
      for (std::int64_t d = 0; d < cfg.patch_dim(); ++d) patches.data[s * cfg.patch_dim() + d] = content[static_cast<std::size_t>(d)];
    }
    EagerBackend<double> bk;
    auto x = bk.linear(patches, params.embed_w.value, params.embed_b.value);
    auto x2 = eager::add(eager::reshape(x, {cfg.n_tokens(), cfg.embed_dim}), params.pos.value);
    const std::int64_t e = cfg.embed_dim;
    for (std::int64_t d = 0; d < e; ++d) {
      const double token_delta = x2.data[0 * e + d] - x2.data[3 * e + d];
      const double pos_delta = params.pos.value.data[0 * e + d] - params.pos.value.data[3 * e + d];
      CHECK(std::abs(token_delta - pos_delta) <= 1e-12);
    }
  }
}

TEST_CASE("attention matches naive loops and degenerate cases") {
  Rng rng(33);
  // random 4x8 against the explicit-loop reference
  Tensor<double> q = Tensor<double>::normal({4, 8}, rng);
  Tensor<double> k = Tensor<double>::normal({4, 8}, rng);
  Tensor<double> v = Tensor<double>::normal({4, 8}, rng);
  Graph<double> g;
  Var out = attention(g, g.constant(q), g.constant(k), g.constant(v));
  Tensor<double> expect({4, 8});
  ref::attention(q.ptr(), k.ptr(), v.ptr(), expect.ptr(), 4, 4, 8);
  CHECK(max_abs_diff(g.val(out), expect) <= 1e-12);

  // single query/key: softmax of a singleton is 1, output = V row
  Tensor<double> q1 = Tensor<double>::normal({1, 8}, rng);
  Tensor<double> k1 = Tensor<double>::normal({1, 8}, rng);
  Tensor<double> v1 = Tensor<double>::normal({1, 8}, rng);
  Graph<double> g1;
  Var o1 = attention(g1, g1.constant(q1), g1.constant(k1), g1.constant(v1));
  CHECK(max_abs_diff(g1.val(o1), v1) <= 1e-15);

  // identical keys: uniform average of V regardless of queries
  Tensor<double> kk({3, 4});
  for (std::int64_t r = 0; r < 3; ++r) {
    for (std::int64_t c = 0; c < 4; ++c) kk.data[r * 4 + c] = 0.7 * c;
  }
  Tensor<double> vv = Tensor<double>::normal({3, 4}, rng);
  Tensor<double> qq = Tensor<double>::normal({3, 4}, rng);
  Graph<double> g2;
  Var o2 = attention(g2, g2.constant(qq), g2.constant(kk), g2.constant(vv));
  for (std::int64_t c = 0; c < 4; ++c) {
    const double avg = (vv.data[c] + vv.data[4 + c] + vv.data[8 + c]) / 3.0;
    for (std::int64_t r = 0; r < 3; ++r) CHECK(std::abs(g2.val(o2).data[r * 4 + c] - avg) <= 1e-12);
  }

  Tensor<double> mism = Tensor<double>::normal({2, 6}, rng);
  Graph<double> g3;
  CHECK_THROWS_AS(attention(g3, g3.constant(q), g3.constant(mism), g3.constant(mism)), std::invalid_argument);
}

TEST_CASE("encoder block residual identity with zeroed projections") {
  const ModelConfig cfg = tiny_config();
  ModelParams<double> params = ModelParams<double>::init(cfg, 17);
  for (auto& blk : params.blocks) {
    for (auto* p : {&blk.attn_t.wo, &blk.attn_t.bo, &blk.fc_w, &blk.fc_b, &blk.attn_s.wo, &blk.attn_s.bo,
                    &blk.mlp_w2, &blk.mlp_b2}) {
      for (auto& v : p->value.data) v = 0.0;
    }
  }
  Rng rng(34);
  Tensor<double> tokens = Tensor<double>::normal({cfg.n_frames, cfg.n_patches(), cfg.embed_dim}, rng);
  EagerBackend<double> bk;
  auto out = model_detail::encoder_block<double>(bk, params.blocks[0], tokens, cfg);
  CHECK(max_abs_diff(out, tokens) <= 1e-12);
}

TEST_CASE("spatial attention with one patch reduces to the value path") {
  ModelConfig cfg = tiny_config();
  cfg.width = 16;  // N = 1
  ModelParams<double> params = ModelParams<double>::init(cfg, 18);
  Rng rng(35);
  Tensor<double> tokens = Tensor<double>::normal({cfg.n_frames, 1, cfg.embed_dim}, rng);
  EagerBackend<double> bk;
  auto& attn = params.blocks[0].attn_s;
  // spatial groups have sequence length 1 -> attention weight is exactly 1,
  // so mhsa(x) = (x Wv + bv) Wo + bo
  auto got = model_detail::mhsa<double>(bk, attn, tokens, cfg.heads);
  auto vproj = eager::add_rowvec(eager::matmul(eager::reshape(tokens, {cfg.n_frames, cfg.embed_dim}), attn.wv.value),
                                 attn.bv.value);
  auto expect = eager::add_rowvec(eager::matmul(vproj, attn.wo.value), attn.bo.value);
  CHECK(max_abs_diff(eager::reshape(got, expect.shape), expect) <= 1e-12);
}

TEST_CASE("temporal attention with one frame reduces to the value path") {
  ModelConfig cfg = tiny_config();
  cfg.n_frames = 1;
  ModelParams<double> params = ModelParams<double>::init(cfg, 19);
  Rng rng(36);
  Tensor<double> tokens = Tensor<double>::normal({1, cfg.n_patches(), cfg.embed_dim}, rng);
  EagerBackend<double> bk;
  auto& attn = params.blocks[0].attn_t;
  auto t_in = eager::transpose01(tokens);  // (N, 1, E): singleton sequences
  auto got = model_detail::mhsa<double>(bk, attn, t_in, cfg.heads);
  auto vproj = eager::add_rowvec(eager::matmul(eager::reshape(t_in, {cfg.n_patches(), cfg.embed_dim}), attn.wv.value),
                                 attn.bv.value);
  auto expect = eager::add_rowvec(eager::matmul(vproj, attn.wo.value), attn.bo.value);
  CHECK(max_abs_diff(eager::reshape(got, expect.shape), expect) <= 1e-12);
}

TEST_CASE("forward shape contract and determinism") {
  for (const ModelConfig& cfg : {tiny_config(), ModelConfig::toy()}) {
    ModelParams<float> params = ModelParams<float>::init(cfg, 3);
    Rng rng(37);
    Tensor<float> clip({cfg.n_frames, cfg.channels, cfg.height, cfg.width});
    for (auto& v : clip.data) v = static_cast<float>(rng.uniform());
    const Tensor<float> out1 = forward_eager(params, clip);
    CHECK(out1.shape == Shape{cfg.n_frames - 1, 6});
    const Tensor<float> out2 = forward_eager(params, clip);
    CHECK(max_abs_diff(out1, out2) == 0.0);
  }
}

TEST_CASE("graph and eager forward agree bitwise") {
  const ModelConfig cfg = tiny_config();
  ModelParams<float> params = ModelParams<float>::init(cfg, 4);
  Rng rng(38);
  Tensor<float> clip({cfg.n_frames, cfg.channels, cfg.height, cfg.width});
  for (auto& v : clip.data) v = static_cast<float>(rng.uniform());
  const Tensor<float> eager_out = forward_eager(params, clip);
  Graph<float> g;
  GraphBackend<float> bk(g);
  Var out = forward_from_patches<float>(bk, params, g.constant(patchify(clip, cfg.patch)));
  CHECK(max_abs_diff(g.val(out), eager_out) == 0.0);
}

TEST_CASE("frame content sensitivity") {
  const ModelConfig cfg = tiny_config();
  ModelParams<float> params = ModelParams<float>::init(cfg, 5);
  Rng rng(39);
  Tensor<float> clip({cfg.n_frames, cfg.channels, cfg.height, cfg.width});
  for (auto& v : clip.data) v = static_cast<float>(rng.uniform());
  const Tensor<float> out = forward_eager(params, clip);

  // swap the first two frames
  Tensor<float> swapped = clip;
  const std::int64_t per = static_cast<std::int64_t>(cfg.channels) * cfg.height * cfg.width;
  for (std::int64_t i = 0; i < per; ++i) std::swap(swapped.data[i], swapped.data[per + i]);
  const Tensor<float> out_swapped = forward_eager(params, swapped);
  CHECK(max_abs_diff(out, out_swapped) > 1e-6);
}

TEST_CASE("temporal attention mixes only tokens with the same spatial index") {
  const ModelConfig cfg = tiny_config();
  ModelParams<double> params = ModelParams<double>::init(cfg, 6);
  Rng rng(40);
  Tensor<double> tokens = Tensor<double>::normal({cfg.n_frames, cfg.n_patches(), cfg.embed_dim}, rng);
  const std::int64_t N = cfg.n_patches(), E = cfg.embed_dim;

  // loss reads one output token (s0, t0) after the temporal sub-layer only;
  // its input gradient must vanish at every spatial index except s0
  const std::int64_t s0 = 1, t0 = 2;
  Graph<double> g;
  GraphBackend<double> bk(g);
  Var z = g.leaf(tokens, true);
  auto& blk = params.blocks[0];
  Var t_in = transpose01(g, z);
  Var h = model_detail::mhsa<double>(bk, blk.attn_t,
                                     model_detail::ln_affine<double>(bk, t_in, blk.ln_t_gamma, blk.ln_t_beta, 1e-5),
                                     cfg.heads);
  Var u = add(g, z, transpose01(g, linear(g, h, bk.param(blk.fc_w), bk.param(blk.fc_b))));
  Var probe = slice_first(g, reshape(g, u, {cfg.n_frames * N, E}), t0 * N + s0, t0 * N + s0 + 1);
  g.backward(sum_all(g, mul(g, probe, probe)));
  const Tensor<double>& gz = g.grad(z);
  double off_axis = 0.0, on_axis = 0.0;
  for (std::int64_t t = 0; t < cfg.n_frames; ++t) {
    for (std::int64_t s = 0; s < N; ++s) {
      double mag = 0.0;
      for (std::int64_t d = 0; d < E; ++d) mag += std::abs(gz.data[(t * N + s) * E + d]);
      if (s == s0) on_axis += mag;
      else off_axis += mag;
    }
  }
  CHECK(off_axis == 0.0);
  CHECK(on_axis > 0.0);

  // spatial attention symmetric check: gradient confined to one frame
  Graph<double> g2;
  GraphBackend<double> bk2(g2);
  Var z2 = g2.leaf(tokens, true);
  Var h2 = model_detail::mhsa<double>(bk2, blk.attn_s,
                                      model_detail::ln_affine<double>(bk2, z2, blk.ln_s_gamma, blk.ln_s_beta, 1e-5),
                                      cfg.heads);
  Var u2 = add(g2, z2, h2);
  Var probe2 = slice_first(g2, reshape(g2, u2, {cfg.n_frames * N, E}), t0 * N + s0, t0 * N + s0 + 1);
  g2.backward(sum_all(g2, mul(g2, probe2, probe2)));
  const Tensor<double>& gz2 = g2.grad(z2);
  double off_frame = 0.0;
  for (std::int64_t t = 0; t < cfg.n_frames; ++t) {
    if (t == t0) continue;
    for (std::int64_t i = 0; i < N * E; ++i) off_frame += std::abs(gz2.data[t * N * E + i]);
  }
  CHECK(off_frame == 0.0);
}

TEST_CASE("parameter count formula matches construction") {
  for (const ModelConfig& cfg : {tiny_config(), ModelConfig::toy(), ModelConfig::full()}) {
    if (cfg.height > 64) {
      // formula only; the full model is instantiated in the acceptance suite
      CHECK(param_count(cfg) > 0);
      continue;
    }
    ModelParams<float> params = ModelParams<float>::init(cfg, 1);
    CHECK(params.actual_param_count() == param_count(cfg));
  }
}

TEST_CASE("train_step learns and matches pure-MSE at alpha 0") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.synth.n_frames = 10;
  cfg.optim.lr = 1e-3;
  const SyntheticResult data = generate_synthetic(cfg.synth);
  const auto frames = render_frames(data.gt, cfg.model, 1);
  SamplerConfig scfg;
  scfg.n_frames = cfg.model.n_frames;
  scfg.batch_size = 2;
  scfg.shuffle_seed = 5;
  const auto batches = assemble_batches(sample_clip_pairs(static_cast<std::int64_t>(frames.size()), scfg).pairs, scfg);
  const ClipPairBatch& batch = batches[0];

  std::vector<Tensor<float>> clips;
  std::vector<Motions> targets;
  for (const Clip& c : batch.clips()) {
    clips.push_back(make_clip_tensor<float>(frames, c, cfg.model));
    const auto t = ground_truth_targets(c, data.gt);
    Motions tm(t.size());
    for (std::size_t w = 0; w < t.size(); ++w) tm[w] = t[w].flat();
    targets.push_back(std::move(tm));
  }

  // alpha = 0 step equals a pure-MSE step bitwise
  LossConfig l0;
  l0.alpha = 0.0;
  ModelParams<float> pa = ModelParams<float>::init(cfg.model, 9);
  ModelParams<float> pb = ModelParams<float>::init(cfg.model, 9);
  AdamState<float> sa, sb;
  const LossBreakdown ba = train_step(pa, batch, clips, targets, l0, sa, cfg.optim);
  const LossBreakdown bb = train_step(pb, batch, clips, targets, l0, sb, cfg.optim);
  CHECK(ba.total == bb.total);
  auto la = pa.all();
  auto lb = pb.all();
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(max_abs_diff(la[i]->value, lb[i]->value) == 0.0);

  // a few steps reduce the loss
  LossConfig l1;
  l1.alpha = 1.0;
  ModelParams<float> pc = ModelParams<float>::init(cfg.model, 9);
  AdamState<float> sc;
  const double first = train_step(pc, batch, clips, targets, l1, sc, cfg.optim).total;
  double last = first;
  for (int i = 0; i < 30; ++i) last = train_step(pc, batch, clips, targets, l1, sc, cfg.optim).total;
  CHECK(last < first);
}

TEST_CASE("graph loss agrees with the standalone loss module") {
  RunConfig rc;
  rc.model = tiny_config();
  SamplerConfig scfg;
  scfg.n_frames = rc.model.n_frames;
  scfg.batch_size = 2;
  scfg.shuffle_seed = 3;
  const auto batches = assemble_batches(sample_clip_pairs(9, scfg).pairs, scfg);
  const ClipPairBatch& batch = batches[0];

  Rng rng(41);
  std::vector<Motions> preds, targets;
  for (std::size_t c = 0; c < batch.n_clips(); ++c) {
    Motions p(2), t(2);
    for (auto& row : p) {
      for (auto& v : row) v = rng.normal();
    }
    for (auto& row : t) {
      for (auto& v : row) v = rng.normal();
    }
    preds.push_back(p);
    targets.push_back(t);
  }

  for (double alpha : {0.0, 1.0, 10.0}) {
    LossConfig lc;
    lc.alpha = alpha;
    Graph<double> g;
    std::vector<Var> pred_vars;
    for (const auto& p : preds) {
      Tensor<double> t({2, 6});
      for (int w = 0; w < 2; ++w) {
        for (int d = 0; d < 6; ++d) t.data[w * 6 + d] = p[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)];
      }
      pred_vars.push_back(g.leaf(t, true));
    }
    Var total = graph_total_loss(g, pred_vars, targets, batch, lc);
    const LossBreakdown b = total_loss(preds, targets, batch, lc);
    CHECK(std::abs(g.val(total).data[0] - b.total) <= 1e-12 * (1.0 + std::abs(b.total)));

    // graph gradient wrt predictions equals the analytic loss gradient
    g.backward(total);
    const auto analytic = loss_gradient(preds, targets, batch, lc);
    for (std::size_t c = 0; c < preds.size(); ++c) {
      const Tensor<double>& gg = g.grad(pred_vars[c]);
      for (int w = 0; w < 2; ++w) {
        for (int d = 0; d < 6; ++d) {
          CHECK(std::abs(gg.data[w * 6 + d] - analytic[c][static_cast<std::size_t>(w)][static_cast<std::size_t>(d)]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("predict_trajectory integrates averaged motions") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.synth.n_frames = 8;
  const SyntheticResult data = generate_synthetic(cfg.synth);
  const auto frames = render_frames(data.gt, cfg.model, 1);
  ModelParams<float> params = ModelParams<float>::init(cfg.model, 2);
  const Trajectory pred = predict_trajectory(params, frames);
  CHECK(pred.size() == frames.size());
  // anchored at the identity
  CHECK(std::abs(pred.poses[0].translation[0]) == 0.0);
  CHECK(orthonormality_error(pred.poses.back().rotation.m) < 1e-9);
}
