// Acceptance gate, analytic and property criteria (1-9, 12).  Prints one
// pass/fail line per criterion and exits nonzero if any fails.  argv[1] is
// the path to the command-line binary, used for the determinism criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvf/checks.hpp"
#include "mvf/cost.hpp"
#include "mvf/net.hpp"

using namespace mvf;

namespace {

int g_failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("criterion %2d [%s] %s (%s)\n", id, pass ? "PASS" : "FAIL",
              title, detail.c_str());
  if (!pass) ++g_failures;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / want;
}

NetworkSpec spec_for(const std::string& backbone, std::size_t frames,
                     double alpha, std::set<std::string> stages,
                     std::size_t classes = 400) {
  NetworkSpec s;
  s.backbone = backbone;
  s.frames = frames;
  s.mvf.alpha = alpha;
  s.mvf_stages = std::move(stages);
  s.classes = classes;
  s.input_resolution = 224;
  s.in_channels = 3;
  return s;
}

NetworkSpec tiny_spec(std::set<std::string> stages, double alpha) {
  NetworkSpec s;
  s.backbone = "tiny";
  s.frames = 4;
  s.mvf.alpha = alpha;
  s.mvf_stages = std::move(stages);
  s.classes = 8;
  s.input_resolution = 16;
  s.in_channels = 1;
  return s;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Bounds-checked naive correlation, independent of the library kernels.
double oracle_at(const VideoTensor<double>& x, const ChannelwiseKernel<double>& k,
                 Axis axis, std::size_t n, std::size_t c, std::size_t t,
                 std::size_t h, std::size_t w) {
  double acc = 0.0;
  for (int i = -1; i <= 1; ++i) {
    long tt = static_cast<long>(t), hh = static_cast<long>(h),
         ww = static_cast<long>(w);
    if (axis == Axis::Temporal) tt += i;
    if (axis == Axis::Height) hh += i;
    if (axis == Axis::Width) ww += i;
    if (tt < 0 || hh < 0 || ww < 0 || tt >= static_cast<long>(x.t()) ||
        hh >= static_cast<long>(x.h()) || ww >= static_cast<long>(x.w()))
      continue;
    acc += k.taps[c * 3 + (i + 1)] *
           x.at(n, c, static_cast<std::size_t>(tt), static_cast<std::size_t>(hh),
                static_cast<std::size_t>(ww));
  }
  return acc;
}

std::string run_and_capture(const std::string& cmd, const std::string& out) {
  const std::string full = cmd + " > " + out + " 2>&1";
  if (std::system(full.c_str()) != 0) return "";
  std::ifstream is(out, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  // 1: per-clip totals for the plain 8/4-frame r50 baselines, under 1 s.
  {
    const auto t0 = std::chrono::steady_clock::now();
    CostReport r8 = cost_network(spec_for("r50", 8, 0.0, {}));
    CostReport r4 = cost_network(spec_for("r50", 4, 0.0, {}));
    const double dt = elapsed_s(t0);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "8f=%.2fG 4f=%.2fG in %.3fs",
                  r8.total_gmacs(), r4.total_gmacs(), dt);
    report(1, "r50 baseline GMACs",
           rel_err(r8.total_gmacs(), 32.88) < 0.005 &&
               rel_err(r4.total_gmacs(), 16.44) < 0.005 && dt < 1.0,
           detail);
  }

  // 2: r101 row with exact 2x frame scaling.
  {
    CostReport r4 = cost_network(spec_for("r101", 4, 0.125, {"res4", "res5"}));
    CostReport r8 = cost_network(spec_for("r101", 8, 0.125, {"res4", "res5"}));
    CostReport r16 =
        cost_network(spec_for("r101", 16, 0.125, {"res4", "res5"}));
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%.2f/%.2f/%.2fG", r4.total_gmacs(),
                  r8.total_gmacs(), r16.total_gmacs());
    report(2, "r101 frame-scaling GMACs",
           rel_err(r4.total_gmacs(), 31.36) < 0.005 &&
               rel_err(r8.total_gmacs(), 62.72) < 0.005 &&
               rel_err(r16.total_gmacs(), 125.45) < 0.005 &&
               r8.total_macs() == 2 * r4.total_macs() &&
               r16.total_macs() == 2 * r8.total_macs(),
           detail);
  }

  // 3: mobilenet_v2 GMACs and r50 parameter total.
  {
    CostReport mb = cost_network(spec_for("mobilenet_v2", 4, 0.0, {}));
    CostReport r50 =
        cost_network(spec_for("r50", 8, 0.125, {"res4", "res5"}));
    char detail[128];
    std::snprintf(detail, sizeof(detail), "mbv2=%.3fG r50=%.2fM params",
                  mb.total_gmacs(), r50.total_mparams());
    report(3, "mobilenet_v2 GMACs and r50 params",
           rel_err(mb.total_gmacs(), 1.25) < 0.03 &&
               rel_err(r50.total_mparams(), 24.3) < 0.005,
           detail);
  }

  // 4: module counts per stage set.
  {
    const std::pair<std::set<std::string>, std::size_t> rows[] = {
        {{"res5"}, 3},
        {{"res4", "res5"}, 9},
        {{"res3", "res4", "res5"}, 13},
        {{"res2", "res3", "res4", "res5"}, 16},
    };
    bool ok = true;
    std::ostringstream detail;
    for (const auto& [stages, want] : rows) {
      NetworkSpec s;
      s.backbone = "r50";
      s.mvf_stages = stages;
      const std::size_t got = mvf_block_count(s);
      ok = ok && got == want;
      detail << got << "/";
    }
    report(4, "block counts 3/9/13/16", ok, detail.str() + "want 3/9/13/16");
  }

  // 5: inference-protocol multiplier display convention.
  {
    CostReport r = cost_network(spec_for("r50", 8, 0.125, {"res4", "res5"}));
    const double total = cost_protocol(r, 3, 10);
    char shown[64];
    std::snprintf(shown, sizeof(shown), "%.1fG x %zu", r.total_gmacs(),
                  r.crops * r.clips);
    report(5, "protocol multiplier 32.9G x 30",
           std::string(shown) == "32.9G x 30" &&
               std::abs(total - r.total_gmacs() * 30.0) < 1e-9,
           shown);
  }

  // 6: fixed-shift module equals the shift oracle exactly.
  {
    const double dev = equiv_tsm(100, 0);
    report(6, "temporal-shift equivalence, 100 tensors", dev == 0.0,
           "max deviation " + std::to_string(dev));
  }

  // 7: alpha=0 network logits bitwise equal the plain 2D network.
  {
    Network<float> plain(tiny_spec({}, 0.5), 77);
    Network<float> a0(tiny_spec({"res2", "res3"}, 0.0), 77);
    float worst = 0.0f;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      std::mt19937_64 rng(5000 + trial);
      VideoTensor<float> x = random_normal<float>(2, 1, 4, 16, 16, 1.0f, rng);
      worst = std::max(worst, max_abs_diff(plain.forward(x, NormMode::Eval),
                                           a0.forward(x, NormMode::Eval)));
    }
    report(7, "alpha=0 reduces to the 2D network, 20 inputs", worst == 0.0f,
           "max |diff| " + std::to_string(worst));
  }

  // 8: full gradient suite under 2 minutes.
  {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (const char* target : {"ops", "mvf", "block", "tiny-net"})
      for (const CheckLine& line : gradcheck_target(target, 0)) {
        worst = std::max(worst, line.max_rel_err);
        ok = ok && line.max_rel_err < 1e-5;
      }
    const double dt = elapsed_s(t0);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "worst %.3e in %.1fs", worst, dt);
    report(8, "gradient suite < 1e-5", ok && dt < 120.0, detail);
  }

  // 9: channel-wise conv equals the naive oracle on 50 shapes, 3 axes.
  {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> nd(1, 2), cd(1, 8), td(1, 5),
        hd(1, 6), wd(1, 7);
    double worst = 0.0;
    for (int shape = 0; shape < 50; ++shape) {
      VideoTensor<double> x =
          random_normal<double>(nd(rng), cd(rng), td(rng), hd(rng), wd(rng),
                                1.0, rng);
      ChannelwiseKernel<double> k(x.c());
      std::normal_distribution<double> tap(0.0, 1.0);
      for (auto& v : k.taps) v = tap(rng);
      for (Axis axis : {Axis::Temporal, Axis::Height, Axis::Width}) {
        VideoTensor<double> y = conv1d_channelwise(x, k, axis);
        for (std::size_t n = 0; n < x.n(); ++n)
          for (std::size_t c = 0; c < x.c(); ++c)
            for (std::size_t t = 0; t < x.t(); ++t)
              for (std::size_t h = 0; h < x.h(); ++h)
                for (std::size_t w = 0; w < x.w(); ++w)
                  worst = std::max(
                      worst, std::abs(y.at(n, c, t, h, w) -
                                      oracle_at(x, k, axis, n, c, t, h, w)));
      }
    }
    report(9, "channel-wise conv oracle, 50 shapes x 3 axes", worst == 0.0,
           "max |diff| " + std::to_string(worst));
  }

  // 12: byte-identical JSON reports across two runs of the CLI.
  {
    bool ok = argc > 1;
    std::string detail = ok ? "" : "no CLI path given";
    if (ok) {
      const std::string bin = argv[1];
      const auto tmp = std::filesystem::temp_directory_path();
      const std::vector<std::string> cmds = {
          " cost --backbone r50 --frames 8 --alpha 0.125 --stages res4,res5"
          " --crops 3 --clips 10 --json",
          " cost --backbone mobilenet_v2 --frames 4 --alpha 0 --json",
      };
      for (std::size_t i = 0; ok && i < cmds.size(); ++i) {
        const std::string f1 = (tmp / ("acc12_a" + std::to_string(i))).string();
        const std::string f2 = (tmp / ("acc12_b" + std::to_string(i))).string();
        const std::string a = run_and_capture(bin + cmds[i], f1);
        const std::string b = run_and_capture(bin + cmds[i], f2);
        ok = !a.empty() && a == b;
        std::remove(f1.c_str());
        std::remove(f2.c_str());
      }
      detail = ok ? "2 commands x 2 runs identical" : "outputs differ or empty";
    }
    report(12, "deterministic JSON reports", ok, detail);
  }

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all analytic/property criteria passed\n");
  return 0;
}
