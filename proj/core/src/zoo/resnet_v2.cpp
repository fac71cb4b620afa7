#include "zoo/build.hpp"

namespace crackdet::zoo {

namespace {

constexpr float kBnEps = 1.001e-5f;

// Pre-activation bottleneck. Downsampling happens in the last block of each
// stack; the first block carries the projection shortcut.
int block_v2(Ops& ops, int x, int filters, int stride, bool conv_shortcut) {
  int preact = ops.bn(x, kBnEps);
  preact = ops.relu(preact);

  int shortcut;
  if (conv_shortcut) {
    shortcut = ops.conv(preact, 4 * filters, 1, stride, Padding::Valid, true);
  } else if (stride > 1) {
    shortcut = ops.maxpool(x, 1, stride, Padding::Valid);
  } else {
    shortcut = x;
  }

  int y = ops.conv(preact, filters, 1, 1, Padding::Valid, /*bias=*/false);
  y = ops.bn(y, kBnEps);
  y = ops.relu(y);
  y = ops.conv(y, filters, 3, stride, Padding::Same, /*bias=*/false);
  y = ops.bn(y, kBnEps);
  y = ops.relu(y);
  y = ops.conv(y, 4 * filters, 1, 1, Padding::Valid, true);
  return ops.add({shortcut, y});
}

int stack_v2(Ops& ops, int x, int filters, int blocks, int final_stride) {
  x = block_v2(ops, x, filters, 1, /*conv_shortcut=*/true);
  for (int i = 2; i < blocks; ++i) x = block_v2(ops, x, filters, 1, false);
  x = block_v2(ops, x, filters, final_stride, false);
  return x;
}

int build_resnet_v2(nn::Network& net, const std::vector<int>& blocks) {
  Ops ops{net};
  int x = ops.conv(net.input_node(), 64, 7, 2, Padding::Same, true);
  x = ops.maxpool(x, 3, 2, Padding::Same);
  x = stack_v2(ops, x, 64, blocks[0], 2);
  x = stack_v2(ops, x, 128, blocks[1], 2);
  x = stack_v2(ops, x, 256, blocks[2], 2);
  x = stack_v2(ops, x, 512, blocks[3], 1);
  x = ops.bn(x, kBnEps);
  return ops.relu(x);
}

}  // namespace

int build_resnet50_v2(nn::Network& net) { return build_resnet_v2(net, {3, 4, 6, 3}); }
int build_resnet101_v2(nn::Network& net) { return build_resnet_v2(net, {3, 4, 23, 3}); }

}  // namespace crackdet::zoo
