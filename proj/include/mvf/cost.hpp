#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvf/net.hpp"

namespace mvf {

// Multiply-accumulate and parameter accounting.  Convolutions and fully
// connected layers contribute k^2*c_in*c_out MACs per output position;
// normalization, activations and pooling contribute one operation per
// element (the accounting used by common profiler tools, and the one that
// reproduces published per-clip figures); shifts, splits, concats and
// fusion adds are free.  All counts are exact integers until display.

struct CostEntry {
  std::string id;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
};

struct CostReport {
  std::vector<CostEntry> per_layer;
  std::size_t crops = 1;
  std::size_t clips = 1;

  std::uint64_t total_macs() const {
    std::uint64_t s = 0;
    for (const auto& e : per_layer) s += e.macs;
    return s;
  }
  std::uint64_t total_params() const {
    std::uint64_t s = 0;
    for (const auto& e : per_layer) s += e.params;
    return s;
  }
  double total_gmacs() const { return static_cast<double>(total_macs()) / 1e9; }
  double total_mparams() const {
    return static_cast<double>(total_params()) / 1e6;
  }
  double protocol_total() const {
    return total_gmacs() * static_cast<double>(crops * clips);
  }
};

struct OpCost {
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
};

inline OpCost cost_conv2d(std::uint64_t c_in, std::uint64_t c_out,
                          std::uint64_t k, std::uint64_t h_out,
                          std::uint64_t w_out, std::uint64_t t,
                          bool bias = false) {
  OpCost r;
  r.macs = k * k * c_in * c_out * h_out * w_out * t;
  r.params = k * k * c_in * c_out + (bias ? c_out : 0);
  return r;
}

inline OpCost cost_pointwise(std::uint64_t c_in, std::uint64_t c_out,
                             std::uint64_t h_out, std::uint64_t w_out,
                             std::uint64_t t, bool bias = false) {
  return cost_conv2d(c_in, c_out, 1, h_out, w_out, t, bias);
}

inline OpCost cost_linear(std::uint64_t in_dim, std::uint64_t out_dim) {
  return {in_dim * out_dim, in_dim * out_dim + out_dim};
}

/// Three 3-tap channel-wise convolutions over the multi-view split.
inline OpCost cost_mvf_module(std::uint64_t c_in, double alpha,
                              std::uint64_t t, std::uint64_t h,
                              std::uint64_t w) {
  const std::uint64_t c1 = split_count(alpha, c_in);
  return {3 * 3 * c1 * t * h * w, 9 * c1};
}

namespace detail {

inline std::size_t out_dim(std::size_t in, std::size_t k, std::size_t stride,
                           std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

struct CostBuilder {
  CostReport& rep;
  std::uint64_t frames;

  void conv(const std::string& id, std::uint64_t c_in, std::uint64_t c_out,
            std::uint64_t k, std::uint64_t spatial, bool bias = false) {
    OpCost oc = cost_conv2d(c_in, c_out, k, spatial, spatial, frames, bias);
    rep.per_layer.push_back({id, oc.macs, oc.params});
  }
  void bn(const std::string& id, std::uint64_t c, std::uint64_t spatial) {
    rep.per_layer.push_back({id, c * spatial * spatial * frames, 2 * c});
  }
  void act(const std::string& id, std::uint64_t c, std::uint64_t spatial) {
    rep.per_layer.push_back({id, c * spatial * spatial * frames, 0});
  }
  void pool(const std::string& id, std::uint64_t c, std::uint64_t spatial) {
    rep.per_layer.push_back({id, c * spatial * spatial * frames, 0});
  }
  void mvf(const std::string& id, std::uint64_t c_in, double alpha,
           std::uint64_t spatial) {
    OpCost oc = cost_mvf_module(c_in, alpha, frames, spatial, spatial);
    rep.per_layer.push_back({id, oc.macs, oc.params});
  }
  // The classifier runs once per frame (segment-style consensus averages
  // per-frame predictions), so its MACs scale with T like everything else.
  void fc(const std::string& id, std::uint64_t in_dim, std::uint64_t out_dim) {
    OpCost oc = cost_linear(in_dim, out_dim);
    rep.per_layer.push_back({id, oc.macs * frames, oc.params});
  }
};

inline void cost_resnet(CostBuilder& b, const BackboneSpec& bb,
                        const NetworkSpec& spec) {
  std::size_t r = spec.input_resolution;
  const std::size_t k = bb.stem.kernel;
  r = out_dim(r, k, bb.stem.stride, k / 2);
  b.conv("stem.conv", spec.in_channels, bb.stem.out_ch, k, r);
  b.bn("stem.bn", bb.stem.out_ch, r);
  b.act("stem.relu", bb.stem.out_ch, r);
  if (bb.stem.max_pool) {
    b.pool("stem.pool", bb.stem.out_ch, r);
    r = out_dim(r, 3, 2, 1);
  }
  for (const auto& st : bb.stages) {
    const bool with_mvf = spec.mvf_stages.count(st.name) > 0;
    std::size_t c_in = st.in_ch;
    std::size_t stride = st.stride;
    for (std::size_t i = 0; i < st.blocks; ++i) {
      const std::string id = st.name + ".b" + std::to_string(i);
      if (with_mvf) b.mvf(id + ".mvf", c_in, spec.mvf.alpha, r);
      const std::size_t r_out = stride == 1 ? r : out_dim(r, 3, 2, 1);
      b.conv(id + ".conv1", c_in, st.mid_ch, 1, r);
      b.bn(id + ".bn1", st.mid_ch, r);
      b.act(id + ".relu1", st.mid_ch, r);
      b.conv(id + ".conv2", st.mid_ch, st.mid_ch, 3, r_out);
      b.bn(id + ".bn2", st.mid_ch, r_out);
      b.act(id + ".relu2", st.mid_ch, r_out);
      b.conv(id + ".conv3", st.mid_ch, st.out_ch, 1, r_out);
      b.bn(id + ".bn3", st.out_ch, r_out);
      if (c_in != st.out_ch || stride != 1) {
        b.conv(id + ".ds_conv", c_in, st.out_ch, 1, r_out);
        b.bn(id + ".ds_bn", st.out_ch, r_out);
      }
      b.act(id + ".relu_out", st.out_ch, r_out);
      r = r_out;
      c_in = st.out_ch;
      stride = 1;
    }
  }
  const std::size_t feat = bb.stages.back().out_ch;
  b.pool("head.pool", feat, r);
  b.fc("head.fc", feat, spec.classes);
}

inline void cost_mobilenet_v2(CostBuilder& b, const BackboneSpec& bb,
                              const NetworkSpec& spec) {
  std::size_t r = out_dim(spec.input_resolution, 3, 2, 1);
  b.conv("stem.conv", spec.in_channels, bb.stem.out_ch, 3, r);
  b.bn("stem.bn", bb.stem.out_ch, r);
  b.act("stem.relu6", bb.stem.out_ch, r);
  std::size_t c_in = bb.stem.out_ch;
  for (std::size_t g = 0; g < bb.inverted_residuals.size(); ++g) {
    const auto& ir = bb.inverted_residuals[g];
    const std::string gname = "ir" + std::to_string(g + 1);
    const bool with_mvf = spec.mvf_stages.count(gname) > 0;
    for (std::size_t i = 0; i < ir.repeats; ++i) {
      const std::string id = gname + ".b" + std::to_string(i);
      const std::size_t stride = i == 0 ? ir.stride : 1;
      const std::size_t r_out = stride == 1 ? r : out_dim(r, 3, 2, 1);
      const std::size_t hidden = c_in * ir.expand;
      if (with_mvf) b.mvf(id + ".mvf", c_in, spec.mvf.alpha, r);
      if (ir.expand != 1) {
        b.conv(id + ".expand", c_in, hidden, 1, r);
        b.bn(id + ".bn1", hidden, r);
        b.act(id + ".relu6_1", hidden, r);
      }
      // depthwise 3x3: one input channel per output channel
      OpCost dw = cost_conv2d(1, hidden, 3, r_out, r_out, b.frames);
      b.rep.per_layer.push_back({id + ".dw", dw.macs, dw.params});
      b.bn(id + ".bn2", hidden, r_out);
      b.act(id + ".relu6_2", hidden, r_out);
      b.conv(id + ".project", hidden, ir.out_ch, 1, r_out);
      b.bn(id + ".bn3", ir.out_ch, r_out);
      r = r_out;
      c_in = ir.out_ch;
    }
  }
  b.conv("head.conv", c_in, bb.head_ch, 1, r);
  b.bn("head.bn", bb.head_ch, r);
  b.act("head.relu6", bb.head_ch, r);
  b.pool("head.pool", bb.head_ch, r);
  b.fc("head.fc", bb.head_ch, spec.classes);
}

}  // namespace detail

inline CostReport cost_network(const NetworkSpec& spec) {
  const BackboneSpec bb = preset(spec.backbone);
  spec.validate(bb);
  CostReport rep;
  detail::CostBuilder b{rep, spec.frames};
  if (bb.kind == BackboneKind::MobileNetV2)
    detail::cost_mobilenet_v2(b, bb, spec);
  else
    detail::cost_resnet(b, bb, spec);
  return rep;
}

inline double cost_protocol(CostReport& report, std::size_t crops,
                            std::size_t clips) {
  if (crops < 1 || clips < 1)
    throw DomainError("cost_protocol: crops and clips must be >= 1");
  report.crops = crops;
  report.clips = clips;
  return report.protocol_total();
}

}  // namespace mvf
