#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mvf/block.hpp"
#include "mvf/module.hpp"

namespace mvf {

struct StageSpec {
  std::string name;
  std::size_t blocks;
  std::size_t in_ch, mid_ch, out_ch;
  std::size_t stride;
};

struct StemSpec {
  std::size_t kernel = 7;
  std::size_t out_ch = 64;
  std::size_t stride = 2;
  bool max_pool = true;  // 3x3 stride-2 pool after the stem conv
};

/// One MobileNet-V2 inverted-residual group (expansion factor, output
/// channels, repeat count, first-block stride).
struct InvertedResidualSpec {
  std::size_t expand, out_ch, repeats, stride;
};

enum class BackboneKind { ResNet, MobileNetV2 };

struct BackboneSpec {
  std::string name;
  BackboneKind kind = BackboneKind::ResNet;
  StemSpec stem;
  std::vector<StageSpec> stages;
  bool executable = false;
  // MobileNet-V2 only:
  std::vector<InvertedResidualSpec> inverted_residuals;
  std::size_t head_ch = 0;  // final 1x1 conv width

  const StageSpec* find_stage(const std::string& n) const {
    for (const auto& s : stages)
      if (s.name == n) return &s;
    return nullptr;
  }
};

inline BackboneSpec preset(const std::string& name) {
  BackboneSpec b;
  b.name = name;
  if (name == "r50" || name == "r101") {
    const std::size_t n4 = name == "r50" ? 6 : 23;
    b.stem = {7, 64, 2, true};
    b.stages = {
        {"res2", 3, 64, 64, 256, 1},
        {"res3", 4, 256, 128, 512, 2},
        {"res4", n4, 512, 256, 1024, 2},
        {"res5", 3, 1024, 512, 2048, 2},
    };
  } else if (name == "tiny") {
    b.stem = {3, 16, 1, false};
    b.stages = {
        {"res2", 2, 16, 4, 16, 1},
        {"res3", 2, 16, 8, 32, 2},
        {"res4", 2, 32, 16, 64, 2},
    };
    b.executable = true;
  } else if (name == "mobilenet_v2") {
    b.kind = BackboneKind::MobileNetV2;
    b.stem = {3, 32, 2, false};
    b.inverted_residuals = {
        {1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2}, {6, 64, 4, 2},
        {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1},
    };
    // Named groups usable as MVF stages: the last two inverted-residual
    // groups (insertion point is an assumption; the source tables do not
    // specify one).
    b.stages = {
        {"ir6", 3, 96, 0, 160, 2},
        {"ir7", 1, 160, 0, 320, 1},
    };
    b.head_ch = 1280;
  } else {
    throw DomainError("unknown backbone preset: " + name);
  }
  return b;
}

struct NetworkSpec {
  std::string backbone = "tiny";
  std::size_t frames = 8;
  MvfConfig mvf;                     // alpha, betas, activation
  std::set<std::string> mvf_stages;  // empty set = C2D
  std::size_t classes = 400;
  std::size_t input_resolution = 224;
  std::size_t in_channels = 3;
  double mvf_init_std = 0.01;

  void validate(const BackboneSpec& b) const {
    if (frames < 1) throw DomainError("NetworkSpec: frames must be >= 1");
    mvf.validate();
    for (const auto& s : mvf_stages)
      if (!b.find_stage(s))
        throw DomainError("NetworkSpec: unknown MVF stage '" + s + "' for " +
                          b.name);
  }
};

inline std::size_t mvf_block_count(const NetworkSpec& spec) {
  const BackboneSpec b = preset(spec.backbone);
  spec.validate(b);
  std::size_t count = 0;
  for (const auto& s : spec.mvf_stages) count += b.find_stage(s)->blocks;
  return count;
}

/// Executable network (tiny preset): stem conv + bottleneck stages +
/// global average pool + fc.
template <typename T>
class Network {
 public:
  Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec) {
    backbone_ = preset(spec.backbone);
    spec.validate(backbone_);
    if (!backbone_.executable)
      throw DomainError("backbone '" + backbone_.name +
                        "' is descriptor-only; build cost reports instead");
    std::mt19937_64 rng(seed);
    stem_conv_ = Conv3x3Layer<T>(spec.in_channels, backbone_.stem.out_ch,
                                 backbone_.stem.stride);
    he_init(stem_conv_.w, 9 * spec.in_channels, rng);
    stem_bn_ = BatchNormLayer<T>(backbone_.stem.out_ch);
    for (const auto& st : backbone_.stages) {
      std::vector<BottleneckBlock<T>> blocks;
      const bool with_mvf = spec.mvf_stages.count(st.name) > 0;
      std::size_t c_in = st.in_ch;
      std::size_t stride = st.stride;
      for (std::size_t i = 0; i < st.blocks; ++i) {
        std::optional<MvfConfig> mc;
        if (with_mvf) mc = spec.mvf;
        BottleneckBlock<T> blk(c_in, st.mid_ch, st.out_ch, stride, mc);
        // One derived stream per block whether or not it carries a module,
        // so C2D and alpha=0 builds initialize the backbone identically.
        const std::uint64_t sub = rng();
        if (blk.mvf)
          blk.mvf->w = init_gaussian<T>(blk.mvf->w.channels(),
                                        spec.mvf_init_std, sub);
        he_init(blk.conv1.w, c_in, rng);
        he_init(blk.conv2.w, 9 * st.mid_ch, rng);
        he_init(blk.conv3.w, st.mid_ch, rng);
        // Zero-init the last norm scale so a fresh block is the identity.
        std::fill(blk.bn3.st.gamma.begin(), blk.bn3.st.gamma.end(), T(0));
        if (blk.ds_conv) he_init(blk.ds_conv->w, c_in, rng);
        blocks.push_back(std::move(blk));
        c_in = st.out_ch;
        stride = 1;
      }
      stages_.push_back(std::move(blocks));
    }
    const std::size_t feat = backbone_.stages.back().out_ch;
    fc_w_.assign(spec.classes * feat, T(0));
    fc_dw_.assign(spec.classes * feat, T(0));
    fc_b_.assign(spec.classes, T(0));
    fc_db_.assign(spec.classes, T(0));
    he_init(fc_w_, feat, rng);
  }

  const NetworkSpec& spec() const { return spec_; }
  const BackboneSpec& backbone() const { return backbone_; }

  VideoTensor<T> forward(const VideoTensor<T>& x, NormMode mode,
                         bool store = false) {
    VideoTensor<T> h = stem_conv_.forward(x, store);
    h = stem_bn_.forward(h, mode, store);
    if (store) stem_act_in_ = h;
    h = relu(h);
    for (auto& stage : stages_)
      for (auto& blk : stage) h = blk.forward(h, mode, store);
    if (store) pre_pool_ = h;
    VideoTensor<T> feats = global_avg_pool(h);
    if (store) feats_ = feats;
    return linear(feats, spec_.classes, fc_w_, fc_b_);
  }

  /// Reverse pass after a stored forward; returns d_input.
  VideoTensor<T> backward(const VideoTensor<T>& d_logits) {
    LinearGrad<T> lg = linear_backward(feats_, spec_.classes, fc_w_, d_logits);
    for (std::size_t i = 0; i < fc_dw_.size(); ++i) fc_dw_[i] += lg.d_weights[i];
    for (std::size_t i = 0; i < fc_db_.size(); ++i) fc_db_[i] += lg.d_bias[i];
    VideoTensor<T> d = global_avg_pool_backward(pre_pool_, lg.d_input);
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it)
      for (auto bit = it->rbegin(); bit != it->rend(); ++bit)
        d = bit->backward(d);
    d = relu_backward(stem_act_in_, d);
    d = stem_bn_.backward(d);
    return stem_conv_.backward(d);
  }

  ParamLists<T> parameters() {
    ParamLists<T> out;
    stem_conv_.collect(out, "stem.conv");
    stem_bn_.collect(out, "stem.bn");
    for (std::size_t s = 0; s < stages_.size(); ++s)
      for (std::size_t i = 0; i < stages_[s].size(); ++i)
        stages_[s][i].collect(out, backbone_.stages[s].name + ".b" +
                                       std::to_string(i));
    out.params.push_back({"fc.w", &fc_w_, &fc_dw_, true});
    out.params.push_back({"fc.b", &fc_b_, &fc_db_, false});
    return out;
  }

  void zero_grad() {
    ParamLists<T> pl = parameters();
    for (auto& p : pl.params) std::fill(p.grad->begin(), p.grad->end(), T(0));
  }

 private:
  static void he_init(std::vector<T>& w, std::size_t fan_in,
                      std::mt19937_64& rng) {
    std::normal_distribution<double> dist(
        0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : w) v = static_cast<T>(dist(rng));
  }

  NetworkSpec spec_;
  BackboneSpec backbone_;
  Conv3x3Layer<T> stem_conv_;
  BatchNormLayer<T> stem_bn_;
  std::vector<std::vector<BottleneckBlock<T>>> stages_;
  std::vector<T> fc_w_, fc_dw_, fc_b_, fc_db_;
  VideoTensor<T> stem_act_in_, pre_pool_, feats_;
};

template <typename T>
Network<T> build_network(const NetworkSpec& spec, std::uint64_t seed) {
  return Network<T>(spec, seed);
}

template <typename T>
VideoTensor<T> network_forward(Network<T>& net, const VideoTensor<T>& batch) {
  return net.forward(batch, NormMode::Eval, false);
}

}  // namespace mvf
