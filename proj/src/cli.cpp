#include "voclip/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "voclip/adam.hpp"
#include "voclip/checkpoint.hpp"
#include "voclip/clip.hpp"
#include "voclip/gradcheck.hpp"
#include "voclip/kernels.hpp"
#include "voclip/kitti_eval.hpp"
#include "voclip/tsformer.hpp"

namespace voclip::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---- synth ----

int cmd_synth(const SyntheticSpec& spec, const std::string& out_gt, const std::string& out_noisy) {
  const SyntheticResult res = generate_synthetic(spec);
  write_kitti_poses(res.gt, out_gt);
  std::cout << "wrote gt=" << out_gt << " frames=" << res.gt.size() << "\n";
  if (!out_noisy.empty()) {
    write_kitti_poses(res.noisy, out_noisy);
    std::cout << "wrote noisy=" << out_noisy << " frames=" << res.noisy.size() << "\n";
  }
  return 0;
}

// ---- sample ----

int cmd_sample(std::int64_t length, const SamplerConfig& cfg, const std::string& out_csv) {
  const SampleResult res = sample_clip_pairs(length, cfg);
  if (res.sequence_too_short) {
    std::cout << "warning: sequence of length " << length << " too short for clip pairs (need >= "
              << cfg.n_frames + 1 << " frames)\n";
  }
  const auto batches = assemble_batches(res.pairs, cfg);
  std::cout << "pairs=" << res.pairs.size() << " batches=" << batches.size() << "\n";
  std::string csv = "pair,first_start,first_end,second_start,second_end,shared_motions\n";
  for (std::size_t i = 0; i < res.pairs.size(); ++i) {
    const ClipPair& p = res.pairs[i];
    std::ostringstream shared;
    for (int w = 1; w < p.first.n_motions(); ++w) {
      if (w > 1) shared << ';';
      shared << p.first.motion_index(w);
    }
    std::cout << "pair " << i << ": first=[" << p.first.start << ".." << p.first.start + p.first.n_frames - 1
              << "] second=[" << p.second.start << ".." << p.second.start + p.second.n_frames - 1
              << "] shared_motions=" << (shared.str().empty() ? "-" : shared.str()) << "\n";
    csv += std::to_string(i) + "," + std::to_string(p.first.start) + "," +
           std::to_string(p.first.start + p.first.n_frames - 1) + "," + std::to_string(p.second.start) + "," +
           std::to_string(p.second.start + p.second.n_frames - 1) + "," + shared.str() + "\n";
  }
  if (!out_csv.empty()) atomic_write(out_csv, csv);
  return 0;
}

// ---- losscheck ----

int cmd_losscheck(const std::string& pred_path, const std::string& target_path, double alpha,
                  McReduction reduction) {
  const MotionsFile pred = read_motions_file(pred_path);
  const MotionsFile target = read_motions_file(target_path);
  if (pred.n_frames != target.n_frames || pred.clips.size() != target.clips.size()) {
    throw std::invalid_argument("losscheck: prediction and target files disagree on clip structure");
  }
  if (pred.clips.size() % 2 != 0 || pred.clips.empty()) {
    throw std::invalid_argument("losscheck: expected an even number of clips (consecutive pairs)");
  }
  ClipPairBatch batch;
  std::vector<Motions> preds, targets;
  const std::size_t n_pairs = pred.clips.size() / 2;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto& [s0, m0] = pred.clips[2 * i];
    const auto& [s1, m1] = pred.clips[2 * i + 1];
    if (s1 != s0 + 1) {
      throw std::invalid_argument("losscheck: clips " + std::to_string(2 * i) + "," + std::to_string(2 * i + 1) +
                                  " are not consecutive (starts " + std::to_string(s0) + "," + std::to_string(s1) + ")");
    }
    if (target.clips[2 * i].first != s0 || target.clips[2 * i + 1].first != s1) {
      throw std::invalid_argument("losscheck: target clip starts do not match predictions");
    }
    batch.first_half.push_back(Clip{s0, pred.n_frames});
    batch.second_half.push_back(Clip{s1, pred.n_frames});
  }
  for (std::size_t i = 0; i < n_pairs; ++i) preds.push_back(pred.clips[2 * i].second);
  for (std::size_t i = 0; i < n_pairs; ++i) preds.push_back(pred.clips[2 * i + 1].second);
  for (std::size_t i = 0; i < n_pairs; ++i) targets.push_back(target.clips[2 * i].second);
  for (std::size_t i = 0; i < n_pairs; ++i) targets.push_back(target.clips[2 * i + 1].second);

  LossConfig cfg;
  cfg.alpha = alpha;
  cfg.mc_reduction = reduction;
  const LossBreakdown b = total_loss(preds, targets, batch, cfg);
  const double mc_oracle = mc_loss_oracle(overlap_map(batch), preds, reduction, n_pairs);
  const double diff = std::abs(b.mc - mc_oracle);

  std::cout << "mse=" << fmt("%.12e", b.mse) << "\n";
  std::cout << "mc=" << fmt("%.12e", b.mc) << "\n";
  std::cout << "mc_oracle=" << fmt("%.12e", mc_oracle) << "\n";
  std::cout << "mc_abs_diff=" << fmt("%.3e", diff) << "\n";
  std::cout << "total=" << fmt("%.12e", b.total) << "\n";
  std::cout << "n_consistency_pairs=" << b.n_consistency_pairs << "\n";
  if (diff > 1e-12 * (1.0 + std::abs(mc_oracle))) {
    std::cerr << "losscheck: closed-form and oracle consistency losses disagree\n";
    return 2;
  }
  return 0;
}

// ---- gradcheck ----

/// gelu with a deliberately wrong backward; only reachable through the
/// --corrupt-backward test hook.
Var gelu_broken(Graph<double>& g, Var a) {
  int oid = static_cast<int>(g.size());
  return g.make("gelu_broken", eager::gelu(g.val(a)), {a}, [a, oid](Graph<double>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      kernels::gelu_grad(gr.val(a).ptr(), go.ptr(), ga->ptr(), go.numel());
      for (auto& v : ga->data) v += 1e-2;
    }
  });
}

}  // namespace

int run_gradcheck(bool corrupt_backward, std::string& report_out) {
  std::ostringstream out;
  int failures = 0;
  Rng rng(20240911);

  auto run = [&](const std::string& name, double tol, double err) {
    const bool ok = err <= tol;
    if (!ok) ++failures;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "component=%-22s max_rel_err=%.3e tol=%.0e status=%s\n", name.c_str(), err, tol,
                  ok ? "ok" : "FAIL");
    out << buf;
  };

  using D = double;
  const double step = 1e-6;

  // scalar-valued wrappers: weighted sum of the op output against a fixed
  // random tensor keeps every output coordinate in play
  auto weighted = [&](Graph<D>& g, Var y, const Tensor<D>& w) { return sum_all(g, mul(g, y, g.constant(w))); };

  {
    Tensor<D> x = Tensor<D>::normal({4, 5}, rng);
    Tensor<D> w = Tensor<D>::normal({4, 5}, rng);
    Tensor<D> o = Tensor<D>::normal({4, 5}, rng);
    run("add", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, add(g, v, g.constant(o)), w); }, x, step));
    run("sub", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, sub(g, g.constant(o), v), w); }, x, step));
    run("mul", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, mul(g, v, g.constant(o)), w); }, x, step));
    run("scale", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, scale(g, v, 1.7), w); }, x, step));
    run("gelu", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Var y = corrupt_backward ? gelu_broken(g, v) : gelu(g, v);
          return weighted(g, y, w);
        }, x, step));
    run("softmax", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, softmax_last(g, v), w); }, x, step));
    run("layer_norm", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, layer_norm_last(g, v, 1e-5), w); }, x, step));
    run("transpose2d", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Tensor<D> wt = eager::transpose2d(w);
          return weighted(g, transpose2d(g, v), wt);
        }, x, step));
    run("reshape", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Tensor<D> wr = eager::reshape(w, {20});
          return weighted(g, reshape(g, v, {20}), wr);
        }, x, step));
    run("slice", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Tensor<D> ws = Tensor<D>::normal({2, 3}, rng);
          return weighted(g, slice_last(g, slice_first(g, v, 1, 3), 1, 4), ws);
        }, x, step));
    run("sum_mean", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          return add(g, sum_all(g, v), add(g, mean_all(g, v), sum_all(g, mean_rows(g, v))));
        }, x, step));
  }
  {
    Tensor<D> x = Tensor<D>::normal({3, 4}, rng);
    Tensor<D> m = Tensor<D>::normal({4, 5}, rng);
    Tensor<D> w = Tensor<D>::normal({3, 5}, rng);
    run("matmul_lhs", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, matmul(g, v, g.constant(m)), w); }, x, step));
    Tensor<D> w2 = Tensor<D>::normal({4, 5}, rng);
    run("matmul_rhs", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          return weighted(g, matmul(g, g.constant(eager::transpose2d(x)), v), w2);
        }, Tensor<D>::normal({3, 5}, rng), step));
  }
  {
    Tensor<D> a = Tensor<D>::normal({2, 3, 4}, rng);
    Tensor<D> b = Tensor<D>::normal({2, 4, 5}, rng);
    Tensor<D> w = Tensor<D>::normal({2, 3, 5}, rng);
    run("bmm_lhs", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, bmm(g, v, g.constant(b)), w); }, a, step));
    run("bmm_rhs", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, bmm(g, g.constant(a), v), w); }, b, step));
    run("transpose01", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Tensor<D> wt = eager::transpose01(w);
          return weighted(g, transpose01(g, v), wt);
        }, w, step));
    run("transpose12", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          Tensor<D> wt = eager::transpose12(w);
          return weighted(g, transpose12(g, v), wt);
        }, w, step));
  }
  {
    Tensor<D> x = Tensor<D>::normal({5, 4}, rng);
    Tensor<D> vvec = Tensor<D>::normal({4}, rng);
    Tensor<D> w = Tensor<D>::normal({5, 4}, rng);
    run("add_rowvec", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, add_rowvec(g, g.constant(x), v), w); }, vvec, step));
    run("mul_rowvec", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) { return weighted(g, mul_rowvec(g, g.constant(x), v), w); }, vvec, step));
    Tensor<D> wc = Tensor<D>::normal({5, 8}, rng);
    run("concat_last", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          return weighted(g, concat_last(g, {v, g.constant(x)}), wc);
        }, x, step));
    Tensor<D> lw = Tensor<D>::normal({4, 3}, rng);
    Tensor<D> lb = Tensor<D>::normal({3}, rng);
    Tensor<D> wl = Tensor<D>::normal({5, 3}, rng);
    run("linear", 1e-5, grad_check<D>([&](Graph<D>& g, Var v) {
          return weighted(g, linear(g, g.constant(x), v, g.constant(lb)), wl);
        }, lw, step));
  }
  {
    Tensor<D> q = Tensor<D>::normal({4, 6}, rng);
    Tensor<D> k = Tensor<D>::normal({4, 6}, rng);
    Tensor<D> v = Tensor<D>::normal({4, 6}, rng);
    Tensor<D> w = Tensor<D>::normal({4, 6}, rng);
    run("attention_q", 1e-5, grad_check<D>([&](Graph<D>& g, Var vq) {
          return weighted(g, attention(g, vq, g.constant(k), g.constant(v)), w);
        }, q, step));
    run("attention_v", 1e-5, grad_check<D>([&](Graph<D>& g, Var vv) {
          return weighted(g, attention(g, g.constant(q), g.constant(k), vv), w);
        }, v, step));
  }

  // analytic loss gradient vs finite differences of total_loss
  {
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
      const int n_frames = 3;
      SamplerConfig scfg;
      scfg.n_frames = n_frames;
      scfg.batch_size = 2;
      scfg.shuffle_seed = 7 + static_cast<std::uint64_t>(rep);
      const auto pairs = sample_clip_pairs(8, scfg).pairs;
      const auto batches = assemble_batches(pairs, scfg);
      const ClipPairBatch& batch = batches[0];
      LossConfig lcfg;
      lcfg.alpha = rep % 3 == 0 ? 0.0 : (rep % 3 == 1 ? 1.0 : 10.0);
      std::vector<Motions> preds(batch.n_clips()), targets(batch.n_clips());
      for (auto& m : preds) {
        m.resize(n_frames - 1);
        for (auto& row : m) {
          for (auto& x : row) x = rng.normal();
        }
      }
      for (auto& m : targets) {
        m.resize(n_frames - 1);
        for (auto& row : m) {
          for (auto& x : row) x = rng.normal();
        }
      }
      const auto analytic = loss_gradient(preds, targets, batch, lcfg);
      for (std::size_t c = 0; c < preds.size(); ++c) {
        for (std::size_t w = 0; w < preds[c].size(); ++w) {
          for (int d = 0; d < 6; ++d) {
            const double x0 = preds[c][w][static_cast<std::size_t>(d)];
            const double h = 1e-6 * (1.0 + std::abs(x0));
            preds[c][w][static_cast<std::size_t>(d)] = x0 + h;
            const double fp = total_loss(preds, targets, batch, lcfg).total;
            preds[c][w][static_cast<std::size_t>(d)] = x0 - h;
            const double fm = total_loss(preds, targets, batch, lcfg).total;
            preds[c][w][static_cast<std::size_t>(d)] = x0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[c][w][static_cast<std::size_t>(d)];
            worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
          }
        }
      }
    }
    run("loss_gradient", 1e-6, worst);
  }

  // encoder block end to end (double precision, miniature dims)
  {
    ModelConfig cfg;
    cfg.n_frames = 3;
    cfg.channels = 1;
    cfg.height = 16;
    cfg.width = 16;
    cfg.patch = 16;
    cfg.embed_dim = 8;
    cfg.depth = 1;
    cfg.heads = 2;
    ModelParams<D> params = ModelParams<D>::init(cfg, 99);
    Tensor<D> tokens = Tensor<D>::normal({cfg.n_frames, cfg.n_patches(), cfg.embed_dim}, rng);
    run("encoder_block", 1e-4, grad_check<D>([&](Graph<D>& g, Var v) {
          GraphBackend<D> bk(g);
          Var y = model_detail::encoder_block<D>(bk, params.blocks[0], v, cfg);
          return sum_all(g, mul(g, y, y));
        }, tokens, step));

    // full model wrt the flattened input patches
    Tensor<D> patches = Tensor<D>::normal({cfg.n_frames, cfg.n_patches(), cfg.patch_dim()}, rng, 0.0, 0.5);
    run("model_input", 1e-4, grad_check<D>([&](Graph<D>& g, Var v) {
          GraphBackend<D> bk(g);
          Var y = forward_from_patches<D>(bk, params, v);
          return sum_all(g, mul(g, y, y));
        }, patches, step));

    // full model wrt selected parameters (head + one deep weight)
    auto param_err = [&](Parameter<D>& target) {
      Tensor<D> saved = target.value;
      Graph<D> g0;
      GraphBackend<D> bk0(g0);
      Var y0 = forward_from_patches<D>(bk0, params, g0.constant(patches));
      Var l0 = sum_all(g0, mul(g0, y0, y0));
      params.zero_grads();
      g0.backward(l0);
      Tensor<D> analytic = target.grad;
      double worst = 0.0;
      for (std::int64_t i = 0; i < saved.numel(); ++i) {
        const double x0 = saved.data[i];
        const double h = 1e-6 * (1.0 + std::abs(x0));
        auto eval = [&](double xv) {
          target.value.data[i] = xv;
          Graph<D> g;
          GraphBackend<D> bk(g);
          Var y = forward_from_patches<D>(bk, params, g.constant(patches));
          Var l = sum_all(g, mul(g, y, y));
          return g.val(l).data[0];
        };
        const double fp = eval(x0 + h);
        const double fm = eval(x0 - h);
        target.value.data[i] = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic.data[i];
        worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
      }
      return worst;
    };
    run("model_head_w", 1e-4, param_err(params.head_w));
    run("model_embed_w", 1e-4, param_err(params.embed_w));
    run("model_attn_wq", 1e-4, param_err(params.blocks[0].attn_t.wq));
  }

  report_out = out.str();
  return failures;
}

namespace {

// ---- train-toy ----

std::string breakdown_line(int step, const LossBreakdown& b) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "step=%d mse=%.9e mc=%.9e total=%.9e pairs=%lld\n", step, b.mse, b.mc, b.total,
                static_cast<long long>(b.n_consistency_pairs));
  return buf;
}

}  // namespace

ToyRunResult run_train_toy(const RunConfig& cfg, const std::string& out_dir, std::string* log_out) {
  cfg.validate();
  fs::create_directories(out_dir);

  const SyntheticResult data = generate_synthetic(cfg.synth);
  const std::vector<Tensor<double>> frames = render_frames(data.gt, cfg.model, cfg.synth.seed);

  SamplerConfig scfg = cfg.sampler;
  scfg.n_frames = cfg.model.n_frames;
  scfg.shuffle_seed = cfg.seed;
  const SampleResult sampled = sample_clip_pairs(static_cast<std::int64_t>(frames.size()), scfg);
  if (sampled.pairs.empty()) throw std::invalid_argument("train-toy: synthetic sequence too short for clip pairs");
  const auto batches = assemble_batches(sampled.pairs, scfg);

  ModelParams<float> params = ModelParams<float>::init(cfg.model, cfg.seed);
  AdamState<float> opt;
  std::string log;
  ToyRunResult result;

  for (int step = 1; step <= cfg.train_steps; ++step) {
    const ClipPairBatch& batch = batches[static_cast<std::size_t>((step - 1) % static_cast<int>(batches.size()))];
    std::vector<Tensor<float>> clip_tensors;
    std::vector<Motions> targets;
    for (const Clip& c : batch.clips()) {
      clip_tensors.push_back(make_clip_tensor<float>(frames, c, cfg.model));
      const auto t = ground_truth_targets(c, data.gt);
      Motions tm(t.size());
      for (std::size_t w = 0; w < t.size(); ++w) tm[w] = t[w].flat();
      targets.push_back(std::move(tm));
    }
    const LossBreakdown b = train_step(params, batch, clip_tensors, targets, cfg.loss, opt, cfg.optim);
    result.steps.push_back(b);
    log += breakdown_line(step, b);
  }

  // held-out synthetic sequence for the final report
  SyntheticSpec test_spec = cfg.synth;
  test_spec.seed = cfg.synth.seed + 1;
  const SyntheticResult test_data = generate_synthetic(test_spec);
  const std::vector<Tensor<double>> test_frames = render_frames(test_data.gt, cfg.model, test_spec.seed);
  const Trajectory pred = predict_trajectory(params, test_frames);
  result.report = evaluate(pred, test_data.gt, AlignmentMode::Similarity7Dof);

  log += "eval " + to_string(result.report.alignment) + " ate_m=" + fmt("%.6f", result.report.ate_m) +
         " t_err=" + fmt("%.6f", result.report.t_err_percent) + " r_err=" + fmt("%.6f", result.report.r_err_deg_per_100m) + "\n";

  auto plist = params.all();
  save_checkpoint<float>((fs::path(out_dir) / "checkpoint.bin").string(), plist, &opt);
  atomic_write((fs::path(out_dir) / "log.txt").string(), log);
  atomic_write((fs::path(out_dir) / "report.txt").string(), result.report.to_text());
  export_report_csv(result.report, (fs::path(out_dir) / "report.csv").string());
  write_kitti_poses(pred, (fs::path(out_dir) / "pred_test.txt").string());
  write_kitti_poses(test_data.gt, (fs::path(out_dir) / "gt_test.txt").string());

  if (log_out) *log_out = log;
  return result;
}

namespace {

int cmd_evaluate(const std::string& pred_path, const std::string& gt_path, AlignmentMode mode, const std::string& out_csv) {
  const Trajectory pred = read_kitti_poses(pred_path);
  const Trajectory gt = read_kitti_poses(gt_path);
  const EvalReport rep = evaluate(pred, gt, mode);
  std::cout << rep.to_text();
  if (!out_csv.empty()) export_report_csv(rep, out_csv);
  return 0;
}

int cmd_align(const std::string& pred_path, const std::string& gt_path, bool with_scale, const std::string& out_path) {
  const Trajectory pred = read_kitti_poses(pred_path);
  const Trajectory gt = read_kitti_poses(gt_path);
  const SimilarityTransform a = umeyama_align(pred, gt, with_scale);
  std::cout << "scale=" << fmt("%.9f", a.scale) << "\n";
  for (int i = 0; i < 3; ++i) {
    std::cout << "r" << i << "=" << fmt("%.9f", a.rotation.m[i][0]) << " " << fmt("%.9f", a.rotation.m[i][1]) << " "
              << fmt("%.9f", a.rotation.m[i][2]) << "\n";
  }
  std::cout << "t=" << fmt("%.9f", a.translation[0]) << " " << fmt("%.9f", a.translation[1]) << " "
            << fmt("%.9f", a.translation[2]) << "\n";
  if (!out_path.empty()) write_kitti_poses(apply_similarity(a, pred), out_path);
  return 0;
}

int cmd_export(const std::string& traj_path, const std::string& out_csv) {
  export_trajectory_csv(read_kitti_poses(traj_path), out_csv);
  std::cout << "wrote " << out_csv << "\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"voclip: motion-consistency training loss and trajectory evaluation toolbox"};
  app.require_subcommand(1);

  int threads = 0;
  if (const char* env = std::getenv("VOCLIP_THREADS")) threads = std::atoi(env);
  app.add_option("--threads", threads, "worker threads for the parallel kernels (default: all)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic ground-truth / noisy pose files");
  std::string synth_shape = "circle";
  SyntheticSpec spec;
  std::string out_gt, out_noisy;
  synth->add_option("--shape", synth_shape, "line|circle|figure-eight")->capture_default_str();
  synth->add_option("--frames", spec.n_frames, "number of frames")->capture_default_str();
  synth->add_option("--step", spec.step_m, "meters per step")->capture_default_str();
  synth->add_option("--curvature", spec.curvature, "turn rate, rad per meter")->capture_default_str();
  synth->add_option("--noise", spec.noise_std, "per-motion noise std")->capture_default_str();
  synth->add_option("--seed", spec.seed, "noise seed")->capture_default_str();
  synth->add_option("--out-gt", out_gt, "output pose file (ground truth)")->required();
  synth->add_option("--out-noisy", out_noisy, "output pose file (noisy copy)");

  // sample
  auto* sample = app.add_subcommand("sample", "list overlapped clip pairs for a sequence");
  std::int64_t sample_length = 10;
  SamplerConfig sampler_cfg;
  std::string sample_csv;
  sample->add_option("--length", sample_length, "sequence length in frames")->required();
  sample->add_option("--n-frames", sampler_cfg.n_frames, "frames per clip")->capture_default_str();
  sample->add_option("--stride", sampler_cfg.stride, "window stride")->capture_default_str();
  sample->add_option("--batch-size", sampler_cfg.batch_size, "pairs per batch")->capture_default_str();
  sample->add_option("--seed", sampler_cfg.shuffle_seed, "shuffle seed")->capture_default_str();
  sample->add_option("--out", sample_csv, "CSV listing output path");

  // losscheck
  auto* losscheck = app.add_subcommand("losscheck", "loss breakdown plus closed-form vs oracle comparison");
  std::string lc_pred, lc_target, lc_red = "mean";
  double lc_alpha = 1.0;
  losscheck->add_option("--pred", lc_pred, "predicted motions file")->required();
  losscheck->add_option("--target", lc_target, "target motions file")->required();
  losscheck->add_option("--alpha", lc_alpha, "consistency weight")->capture_default_str();
  losscheck->add_option("--mc-reduction", lc_red, "sum|mean")->capture_default_str();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "run the gradient verification suite");
  bool corrupt = false;
  gradcheck->add_flag("--corrupt-backward", corrupt, "inject a broken backward (test hook)")->group("");

  // train-toy
  auto* train = app.add_subcommand("train-toy", "seeded toy training run on synthetic data");
  std::string train_config, train_out = "toy_run";
  double train_alpha = -1.0;
  std::int64_t train_seed = -1;
  int train_steps = -1;
  train->add_option("--config", train_config, "run configuration file");
  train->add_option("--out", train_out, "output directory")->capture_default_str();
  train->add_option("--alpha", train_alpha, "override loss.alpha");
  train->add_option("--seed", train_seed, "override seed");
  train->add_option("--steps", train_steps, "override train.steps");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "trajectory metrics for prediction vs ground truth");
  std::string ev_pred, ev_gt, ev_align = "7dof", ev_out;
  evaluate_cmd->add_option("--pred", ev_pred, "predicted pose file")->required();
  evaluate_cmd->add_option("--gt", ev_gt, "ground-truth pose file")->required();
  evaluate_cmd->add_option("--align", ev_align, "none|6dof|7dof")->capture_default_str();
  evaluate_cmd->add_option("--out", ev_out, "report CSV output path");

  // align
  auto* align_cmd = app.add_subcommand("align", "fit and apply a similarity alignment");
  std::string al_pred, al_gt, al_mode = "7dof", al_out;
  align_cmd->add_option("--pred", al_pred, "predicted pose file")->required();
  align_cmd->add_option("--gt", al_gt, "ground-truth pose file")->required();
  align_cmd->add_option("--align", al_mode, "6dof|7dof")->capture_default_str();
  align_cmd->add_option("--out", al_out, "aligned pose file output path");

  // export
  auto* export_cmd = app.add_subcommand("export", "convert a pose file to CSV positions");
  std::string ex_traj, ex_out;
  export_cmd->add_option("--traj", ex_traj, "pose file")->required();
  export_cmd->add_option("--out", ex_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  kernels::set_threads(threads);

  try {
    if (synth->parsed()) {
      spec.shape = synth_shape_from_string(synth_shape);
      return cmd_synth(spec, out_gt, out_noisy);
    }
    if (sample->parsed()) return cmd_sample(sample_length, sampler_cfg, sample_csv);
    if (losscheck->parsed()) {
      McReduction red;
      if (lc_red == "sum") red = McReduction::Sum;
      else if (lc_red == "mean") red = McReduction::Mean;
      else throw std::invalid_argument("losscheck: --mc-reduction must be sum|mean");
      if (lc_alpha < 0.0) throw std::invalid_argument("losscheck: alpha must be >= 0");
      return cmd_losscheck(lc_pred, lc_target, lc_alpha, red);
    }
    if (gradcheck->parsed()) {
      std::string report;
      const int failures = run_gradcheck(corrupt, report);
      std::cout << report;
      if (failures > 0) {
        std::cerr << "gradcheck: " << failures << " component(s) above tolerance\n";
        return 2;
      }
      return 0;
    }
    if (train->parsed()) {
      RunConfig cfg = train_config.empty() ? RunConfig{} : read_config(train_config);
      if (train_alpha >= 0.0) cfg.loss.alpha = train_alpha;
      if (train_seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(train_seed);
        cfg.sampler.shuffle_seed = cfg.seed;
      }
      if (train_steps > 0) cfg.train_steps = train_steps;
      cfg.validate();
      const ToyRunResult res = run_train_toy(cfg, train_out, nullptr);
      std::cout << "steps=" << res.steps.size() << " final_total=" << fmt("%.9e", res.steps.back().total) << "\n";
      std::cout << "outputs in " << train_out << "\n";
      return 0;
    }
    if (evaluate_cmd->parsed()) return cmd_evaluate(ev_pred, ev_gt, alignment_from_string(ev_align), ev_out);
    if (align_cmd->parsed()) {
      if (al_mode != "6dof" && al_mode != "7dof") throw std::invalid_argument("align: --align must be 6dof|7dof");
      return cmd_align(al_pred, al_gt, al_mode == "7dof", al_out);
    }
    if (export_cmd->parsed()) return cmd_export(ex_traj, ex_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("voclip");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace voclip::cli
