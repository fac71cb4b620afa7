#include "zoo/build.hpp"

namespace crackdet::zoo {

namespace {

int conv_bn(Ops& ops, int x, int filters, int kh, int kw, int sh = 1, int sw = 1,
            Padding p = Padding::Same) {
  return ops.conv_bn_act(x, filters, kh, kw, sh, sw, p, Act::Relu);
}

// Residual inception block; `up_filters` matches the trunk width and the
// branch mix depends on the stage (35/17/8).
int res_block(Ops& ops, int x, char stage, float scale, bool apply_relu) {
  std::vector<int> branches;
  if (stage == 'a') {  // block35, 35x35 stage
    int b0 = conv_bn(ops, x, 32, 1, 1);
    int b1 = conv_bn(ops, x, 32, 1, 1);
    b1 = conv_bn(ops, b1, 32, 3, 3);
    int b2 = conv_bn(ops, x, 32, 1, 1);
    b2 = conv_bn(ops, b2, 48, 3, 3);
    b2 = conv_bn(ops, b2, 64, 3, 3);
    branches = {b0, b1, b2};
  } else if (stage == 'b') {  // block17, 17x17 stage
    int b0 = conv_bn(ops, x, 192, 1, 1);
    int b1 = conv_bn(ops, x, 128, 1, 1);
    b1 = conv_bn(ops, b1, 160, 1, 7);
    b1 = conv_bn(ops, b1, 192, 7, 1);
    branches = {b0, b1};
  } else {  // block8, 8x8 stage
    int b0 = conv_bn(ops, x, 192, 1, 1);
    int b1 = conv_bn(ops, x, 192, 1, 1);
    b1 = conv_bn(ops, b1, 224, 1, 3);
    b1 = conv_bn(ops, b1, 256, 3, 1);
    branches = {b0, b1};
  }
  int mixed = ops.concat(branches);
  int up = ops.conv(mixed, ops.channels(x), 1, 1, Padding::Valid, /*bias=*/true);
  int out = ops.add({x, up}, {1.0f, scale});
  return apply_relu ? ops.relu(out) : out;
}

}  // namespace

int build_inception_resnet_v2(nn::Network& net) {
  Ops ops{net};
  const auto V = Padding::Valid;

  // Stem
  int x = conv_bn(ops, net.input_node(), 32, 3, 3, 2, 2, V);
  x = conv_bn(ops, x, 32, 3, 3, 1, 1, V);
  x = conv_bn(ops, x, 64, 3, 3);
  x = ops.maxpool(x, 3, 2, V);
  x = conv_bn(ops, x, 80, 1, 1, 1, 1, V);
  x = conv_bn(ops, x, 192, 3, 3, 1, 1, V);
  x = ops.maxpool(x, 3, 2, V);

  // Mixed 5b (Inception-A)
  {
    int b0 = conv_bn(ops, x, 96, 1, 1);
    int b1 = conv_bn(ops, x, 48, 1, 1);
    b1 = conv_bn(ops, b1, 64, 5, 5);
    int b2 = conv_bn(ops, x, 64, 1, 1);
    b2 = conv_bn(ops, b2, 96, 3, 3);
    b2 = conv_bn(ops, b2, 96, 3, 3);
    int bp = ops.avgpool(x, 3, 1, Padding::Same);
    bp = conv_bn(ops, bp, 64, 1, 1);
    x = ops.concat({b0, b1, b2, bp});  // 320
  }

  for (int i = 0; i < 10; ++i) x = res_block(ops, x, 'a', 0.17f, true);

  // Mixed 6a (Reduction-A)
  {
    int b0 = conv_bn(ops, x, 384, 3, 3, 2, 2, V);
    int b1 = conv_bn(ops, x, 256, 1, 1);
    b1 = conv_bn(ops, b1, 256, 3, 3);
    b1 = conv_bn(ops, b1, 384, 3, 3, 2, 2, V);
    int bp = ops.maxpool(x, 3, 2, V);
    x = ops.concat({b0, b1, bp});  // 1088
  }

  for (int i = 0; i < 20; ++i) x = res_block(ops, x, 'b', 0.1f, true);

  // Mixed 7a (Reduction-B)
  {
    int b0 = conv_bn(ops, x, 256, 1, 1);
    b0 = conv_bn(ops, b0, 384, 3, 3, 2, 2, V);
    int b1 = conv_bn(ops, x, 256, 1, 1);
    b1 = conv_bn(ops, b1, 288, 3, 3, 2, 2, V);
    int b2 = conv_bn(ops, x, 256, 1, 1);
    b2 = conv_bn(ops, b2, 288, 3, 3);
    b2 = conv_bn(ops, b2, 320, 3, 3, 2, 2, V);
    int bp = ops.maxpool(x, 3, 2, V);
    x = ops.concat({b0, b1, b2, bp});  // 2080
  }

  for (int i = 0; i < 9; ++i) x = res_block(ops, x, 'c', 0.2f, true);
  x = res_block(ops, x, 'c', 1.0f, /*apply_relu=*/false);

  return conv_bn(ops, x, 1536, 1, 1);
}

}  // namespace crackdet::zoo
