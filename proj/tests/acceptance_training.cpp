// Acceptance gate, training criteria (10, 11).  Trains the fusion model and
// the plain per-frame model on the synthetic eight-class motion task and
// compares them; runs for tens of minutes on a single core.  Prints one
// pass/fail line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "mvf/train.hpp"

using namespace mvf;

namespace {

int g_failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("criterion %2d [%s] %s (%s)\n", id, pass ? "PASS" : "FAIL",
              title, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

NetworkSpec model_spec(double alpha, double beta_h, double beta_w,
                       std::set<std::string> stages) {
  NetworkSpec s;
  s.backbone = "tiny";
  s.frames = 8;
  s.mvf.alpha = alpha;
  s.mvf.beta_h = beta_h;
  s.mvf.beta_w = beta_w;
  s.mvf_stages = std::move(stages);
  s.classes = 8;
  s.input_resolution = 32;
  s.in_channels = 1;
  return s;
}

template <typename T>
VideoTensor<T> permute_frames(const VideoTensor<T>& x,
                              const std::vector<std::size_t>& perm) {
  VideoTensor<T> out = zeros_like(x);
  const std::size_t plane = x.plane();
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c)
      for (std::size_t t = 0; t < x.t(); ++t)
        std::copy_n(x.channel(n, c) + perm[t] * plane, plane,
                    out.channel(n, c) + t * plane);
  return out;
}

double run_budget(const NetworkSpec& spec, const SyntheticTask& task,
                  std::size_t clips, std::size_t epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.decay_epochs = {epochs * 2 / 3, epochs * 8 / 9};
  TrainResult<float> r = train<float>(spec, task, cfg, clips, 200);
  return r.history.back().val_acc;
}

}  // namespace

int main() {
  SyntheticTask task;  // eight classes: 4 directions x {forward, reversed}

  // 10: matched-budget separation between the fusion model and the plain
  // per-frame model: 2000 clips, 30 epochs each.
  {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg;  // defaults: 30 epochs, decay at 20/26, batch 8, seed 0
    NetworkSpec mvf_spec = model_spec(0.5, 1.0, 1.0, {"res2", "res3"});
    NetworkSpec c2d_spec = model_spec(0.0, 1.0, 1.0, {});

    TrainResult<float> mvf_run = train<float>(mvf_spec, task, cfg, 2000, 400);
    const double mvf_acc = mvf_run.history.back().val_acc;

    TrainResult<float> c2d_run = train<float>(c2d_spec, task, cfg, 2000, 400);
    Dataset<float> val = make_dataset<float>(task, 400, cfg.seed + 0x5EED);
    const double c2d_pair = evaluate_pair_accuracy(c2d_run.net, val);

    // the per-frame model must be bitwise blind to frame order
    std::mt19937_64 rng(314);
    float worst = 0.0f;
    for (int trial = 0; trial < 5; ++trial) {
      const VideoTensor<float>& clip = val.clips[static_cast<std::size_t>(trial)];
      std::vector<std::size_t> perm(clip.t());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      worst = std::max(
          worst,
          max_abs_diff(c2d_run.net.forward(clip, NormMode::Eval),
                       c2d_run.net.forward(permute_frames(clip, perm),
                                           NormMode::Eval)));
    }
    const double dt = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "fusion val_acc=%.3f (need >=0.90), per-frame pair=%.3f "
                  "(need <=0.55), perm |diff|=%g, %.0fs",
                  mvf_acc, c2d_pair, static_cast<double>(worst), dt);
    report(10, "temporal-modeling separation at matched budget",
           mvf_acc >= 0.90 && c2d_pair <= 0.55 && worst == 0.0f, detail);
  }

  // 11: with every view active the model must beat the temporal-only
  // configuration, median over 3 seeds at a deliberately small budget.
  {
    const std::size_t clips = 400, epochs = 6;
    std::vector<double> thw, t_only;
    NetworkSpec thw_spec = model_spec(0.5, 1.0, 1.0, {"res2", "res3"});
    NetworkSpec t_spec = model_spec(0.5, 0.0, 0.0, {"res2", "res3"});
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      thw.push_back(run_budget(thw_spec, task, clips, epochs, seed));
      t_only.push_back(run_budget(t_spec, task, clips, epochs, seed));
    }
    std::sort(thw.begin(), thw.end());
    std::sort(t_only.begin(), t_only.end());
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "median T-H-W=%.3f vs T-only=%.3f "
                  "(runs %.3f/%.3f/%.3f vs %.3f/%.3f/%.3f)",
                  thw[1], t_only[1], thw[0], thw[1], thw[2], t_only[0],
                  t_only[1], t_only[2]);
    report(11, "all three views beat temporal-only", thw[1] > t_only[1],
           detail);
  }

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all training criteria passed\n");
  return 0;
}
