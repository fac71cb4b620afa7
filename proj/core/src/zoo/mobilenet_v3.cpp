#include "zoo/build.hpp"

#include <algorithm>

namespace crackdet::zoo {

namespace {

// Round channel counts to multiples of 8, never dropping below 90%.
int depth8(float v) {
  int n = std::max(8, static_cast<int>(v + 4.0f) / 8 * 8);
  if (static_cast<float>(n) < 0.9f * v) n += 8;
  return n;
}

int se_block(Ops& ops, int x) {
  const int c = ops.channels(x);
  const int squeeze = depth8(static_cast<float>(c) * 0.25f);
  int s = ops.gap(x, /*keepdims=*/true);
  s = ops.conv(s, squeeze, 1, 1, Padding::Valid, /*bias=*/true);
  s = ops.relu(s);
  s = ops.conv(s, c, 1, 1, Padding::Valid, /*bias=*/true);
  s = ops.act(s, Act::HardSigmoid);
  return ops.chscale(x, s);
}

struct Bneck {
  int kernel;
  int expand;
  int out;
  bool se;
  Act activation;
  int stride;
};

int inverted_residual(Ops& ops, int x, const Bneck& b) {
  const int in_c = ops.channels(x);
  int y = x;
  if (b.expand != in_c) {
    y = ops.conv_bn_act(y, b.expand, 1, 1, 1, 1, Padding::Valid, b.activation);
  }
  y = ops.dwconv(y, b.kernel, b.stride, Padding::Same, /*bias=*/false);
  y = ops.bn(y);
  y = ops.act(y, b.activation);
  if (b.se) y = se_block(ops, y);
  y = ops.conv(y, b.out, 1, 1, Padding::Valid, /*bias=*/false);
  y = ops.bn(y);
  if (b.stride == 1 && in_c == b.out) y = ops.add({x, y});
  return y;
}

}  // namespace

int build_mobilenet_v3(nn::Network& net, bool large) {
  Ops ops{net};
  constexpr Act HS = Act::HardSwish;
  constexpr Act RE = Act::Relu;

  static const std::vector<Bneck> kSmall = {
      {3, 16, 16, true, RE, 2},   {3, 72, 24, false, RE, 2},
      {3, 88, 24, false, RE, 1},  {5, 96, 40, true, HS, 2},
      {5, 240, 40, true, HS, 1},  {5, 240, 40, true, HS, 1},
      {5, 120, 48, true, HS, 1},  {5, 144, 48, true, HS, 1},
      {5, 288, 96, true, HS, 2},  {5, 576, 96, true, HS, 1},
      {5, 576, 96, true, HS, 1},
  };
  static const std::vector<Bneck> kLarge = {
      {3, 16, 16, false, RE, 1},  {3, 64, 24, false, RE, 2},
      {3, 72, 24, false, RE, 1},  {5, 72, 40, true, RE, 2},
      {5, 120, 40, true, RE, 1},  {5, 120, 40, true, RE, 1},
      {3, 240, 80, false, HS, 2}, {3, 200, 80, false, HS, 1},
      {3, 184, 80, false, HS, 1}, {3, 184, 80, false, HS, 1},
      {3, 480, 112, true, HS, 1}, {3, 672, 112, true, HS, 1},
      {5, 672, 160, true, HS, 2}, {5, 960, 160, true, HS, 1},
      {5, 960, 160, true, HS, 1},
  };

  int x = ops.conv_bn_act(net.input_node(), 16, 3, 3, 2, 2, Padding::Same, HS);
  for (const auto& b : (large ? kLarge : kSmall)) x = inverted_residual(ops, x, b);
  const int last = large ? 960 : 576;
  return ops.conv_bn_act(x, last, 1, 1, 1, 1, Padding::Valid, HS);
}

}  // namespace crackdet::zoo
