#pragma once

#include <string>
#include <vector>

#include "crackdet/nn/network.hpp"

namespace crackdet::zoo {

using nn::Act;
using nn::Padding;

// Thin builder over Network; generates stable layer names so weight archives
// match across process runs.
struct Ops {
  nn::Network& net;
  int counter = 0;

  std::string next(const char* kind) {
    return std::string(kind) + "_" + std::to_string(counter++);
  }

  int conv(int in, int filters, int kh, int kw, int sh, int sw,
           Padding p = Padding::Same, bool bias = true) {
    nn::Conv2DConfig cfg{filters, kh, kw, sh, sw, p, bias};
    return net.add(std::make_unique<nn::Conv2D>(next("conv"), cfg), {in});
  }
  int conv(int in, int filters, int k, int s = 1, Padding p = Padding::Same,
           bool bias = true) {
    return conv(in, filters, k, k, s, s, p, bias);
  }
  int dwconv(int in, int k, int s, Padding p = Padding::Same, bool bias = false) {
    nn::DepthwiseConv2DConfig cfg{k, k, s, s, p, bias};
    return net.add(std::make_unique<nn::DepthwiseConv2D>(next("dwconv"), cfg), {in});
  }
  int bn(int in, float eps = 1e-3f) {
    return net.add(std::make_unique<nn::BatchNorm>(next("bn"), eps), {in});
  }
  int act(int in, Act a) {
    return net.add(std::make_unique<nn::Activation>(next("act"), a), {in});
  }
  int relu(int in) { return act(in, Act::Relu); }
  int hswish(int in) { return act(in, Act::HardSwish); }
  int maxpool(int in, int k, int s, Padding p = Padding::Valid) {
    nn::Pool2DConfig cfg{nn::PoolKind::Max, k, k, s, s, p};
    return net.add(std::make_unique<nn::Pool2D>(next("maxpool"), cfg), {in});
  }
  int avgpool(int in, int k, int s, Padding p = Padding::Valid) {
    nn::Pool2DConfig cfg{nn::PoolKind::Avg, k, k, s, s, p};
    return net.add(std::make_unique<nn::Pool2D>(next("avgpool"), cfg), {in});
  }
  int gap(int in, bool keepdims) {
    return net.add(std::make_unique<nn::GlobalAvgPool>(next("gap"), keepdims), {in});
  }
  int add(std::vector<int> ins, std::vector<float> scales = {}) {
    return net.add(std::make_unique<nn::Add>(next("add"), std::move(scales)),
                   std::move(ins));
  }
  int concat(std::vector<int> ins) {
    return net.add(std::make_unique<nn::Concat>(next("concat")), std::move(ins));
  }
  int chscale(int x, int gate) {
    return net.add(std::make_unique<nn::ChannelScale>(next("se_scale")), {x, gate});
  }
  int dense(int in, int units, bool bias = true) {
    return net.add(std::make_unique<nn::Dense>(next("dense"), units, bias), {in});
  }

  int channels(int node) const { return net.node_shape(node).c; }

  // conv -> BN -> activation; the workhorse of most families.
  int conv_bn_act(int in, int filters, int kh, int kw, int sh, int sw,
                  Padding p, Act a, float bn_eps = 1e-3f) {
    int x = conv(in, filters, kh, kw, sh, sw, p, /*bias=*/false);
    x = bn(x, bn_eps);
    return act(x, a);
  }
  // depthwise + pointwise without intermediate nonlinearity.
  int separable_conv(int in, int filters, int k, int s = 1,
                     Padding p = Padding::Same) {
    int x = dwconv(in, k, s, p, /*bias=*/false);
    return conv(x, filters, 1, 1, Padding::Valid, /*bias=*/false);
  }
};

int build_vgg16(nn::Network& net);
int build_vgg19(nn::Network& net);
int build_resnet50_v2(nn::Network& net);
int build_resnet101_v2(nn::Network& net);
int build_densenet(nn::Network& net, const std::vector<int>& blocks);
int build_mobilenet_v3(nn::Network& net, bool large);
int build_xception(nn::Network& net);
int build_inception_resnet_v2(nn::Network& net);

}  // namespace crackdet::zoo
