// Times the OpenMP kernels against the serial reference implementations and
// reports speedups plus the max deviation between the two paths.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "voclip/adam.hpp"
#include "voclip/io.hpp"
#include "voclip/kernels.hpp"
#include "voclip/ref_kernels.hpp"
#include "voclip/rng.hpp"
#include "voclip/tensor.hpp"
#include "voclip/tsformer.hpp"

using namespace voclip;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void report(const std::string& name, double serial_s, double parallel_s, double max_diff) {
  std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   max|diff| %.3e\n", name.c_str(),
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, max_diff);
}

template <typename T>
void bench_matmul(Rng& rng, std::int64_t m, std::int64_t k, std::int64_t n, const char* label) {
  Tensor<T> a = Tensor<T>::normal({m, k}, rng);
  Tensor<T> b = Tensor<T>::normal({k, n}, rng);
  Tensor<T> c_ref({m, n}), c_par({m, n});
  const double ts = time_best_of(3, [&] { ref::matmul(a.ptr(), b.ptr(), c_ref.ptr(), m, k, n); });
  const double tp = time_best_of(3, [&] { kernels::matmul(a.ptr(), b.ptr(), c_par.ptr(), m, k, n); });
  report(label, ts, tp, max_abs_diff(c_ref, c_par));
}

template <typename T>
void bench_rows(Rng& rng, std::int64_t rows, std::int64_t cols) {
  Tensor<T> x = Tensor<T>::normal({rows, cols}, rng);
  Tensor<T> y_ref(x.shape), y_par(x.shape);
  double ts = time_best_of(5, [&] { ref::softmax_rows(x.ptr(), y_ref.ptr(), rows, cols); });
  double tp = time_best_of(5, [&] { kernels::softmax_rows(x.ptr(), y_par.ptr(), rows, cols); });
  report("softmax_rows", ts, tp, max_abs_diff(y_ref, y_par));
  ts = time_best_of(5, [&] { ref::layer_norm_rows(x.ptr(), y_ref.ptr(), rows, cols, T(1e-5)); });
  tp = time_best_of(5, [&] { kernels::layer_norm_rows(x.ptr(), y_par.ptr(), rows, cols, T(1e-5)); });
  report("layer_norm_rows", ts, tp, max_abs_diff(y_ref, y_par));
  ts = time_best_of(5, [&] { ref::gelu(x.ptr(), y_ref.ptr(), x.numel()); });
  tp = time_best_of(5, [&] { kernels::gelu(x.ptr(), y_par.ptr(), x.numel()); });
  report("gelu", ts, tp, max_abs_diff(y_ref, y_par));
}

template <typename T>
void bench_attention(Rng& rng, std::int64_t groups, std::int64_t seq, std::int64_t dim) {
  Tensor<T> q = Tensor<T>::normal({groups, seq, dim}, rng);
  Tensor<T> k = Tensor<T>::normal({groups, seq, dim}, rng);
  Tensor<T> v = Tensor<T>::normal({groups, seq, dim}, rng);
  Tensor<T> out_ref({groups, seq, dim});
  Tensor<T> out_par({groups, seq, dim});
  const double ts = time_best_of(3, [&] {
    for (std::int64_t g = 0; g < groups; ++g) {
      ref::attention(q.ptr() + g * seq * dim, k.ptr() + g * seq * dim, v.ptr() + g * seq * dim,
                     out_ref.ptr() + g * seq * dim, seq, seq, dim);
    }
  });
  const double tp = time_best_of(3, [&] {
    Tensor<T> scores({groups, seq, seq});
    kernels::bmm(q.ptr(), eager::transpose12(k).ptr(), scores.ptr(), groups, seq, dim, seq);
    kernels::scale(scores.ptr(), T(1) / std::sqrt(static_cast<T>(dim)), scores.ptr(), scores.numel());
    Tensor<T> attn({groups, seq, seq});
    kernels::softmax_rows(scores.ptr(), attn.ptr(), groups * seq, seq);
    kernels::bmm(attn.ptr(), v.ptr(), out_par.ptr(), groups, seq, seq, dim);
  });
  report("attention", ts, tp, max_abs_diff(out_ref, out_par));
}

void bench_train_step(Rng&) {
  RunConfig cfg;
  cfg.synth.n_frames = 12;
  cfg.train_steps = 1;
  const SyntheticResult data = generate_synthetic(cfg.synth);
  const auto frames = render_frames(data.gt, cfg.model, 1);
  SamplerConfig scfg = cfg.sampler;
  scfg.n_frames = cfg.model.n_frames;
  const auto batches = assemble_batches(sample_clip_pairs(static_cast<std::int64_t>(frames.size()), scfg).pairs, scfg);
  ModelParams<float> params = ModelParams<float>::init(cfg.model, 3);
  AdamState<float> opt;
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
  const double tp = time_best_of(3, [&] { train_step(params, batch, clips, targets, cfg.loss, opt, cfg.optim); });
  std::printf("%-24s one toy batch (fwd+bwd+adam) %9.3f ms\n", "train_step", tp * 1e3);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) kernels::set_threads(std::atoi(argv[1]));
  std::printf("threads: %d\n", kernels::max_threads());
  Rng rng(42);
  bench_matmul<float>(rng, 384, 384, 384, "matmul f32 384^3");
  bench_matmul<double>(rng, 384, 384, 384, "matmul f64 384^3");
  bench_matmul<float>(rng, 1440, 768, 384, "matmul f32 embed");
  bench_rows<double>(rng, 4096, 384);
  bench_attention<double>(rng, 8, 256, 64);
  bench_train_step(rng);
  return 0;
}
