#include "zoo/build.hpp"

namespace crackdet::zoo {

namespace {

int sep_bn(Ops& ops, int x, int filters) {
  x = ops.separable_conv(x, filters, 3, 1, Padding::Same);
  return ops.bn(x);
}

// Entry/exit flow module: two separable convs with a strided-maxpool tail and
// a 1x1 strided projection shortcut.
int reduction_block(Ops& ops, int x, int f1, int f2, bool relu_first) {
  int shortcut = ops.conv(x, f2, 1, 2, Padding::Same, /*bias=*/false);
  shortcut = ops.bn(shortcut);
  int y = x;
  if (relu_first) y = ops.relu(y);
  y = sep_bn(ops, y, f1);
  y = ops.relu(y);
  y = sep_bn(ops, y, f2);
  y = ops.maxpool(y, 3, 2, Padding::Same);
  return ops.add({shortcut, y});
}

}  // namespace

int build_xception(nn::Network& net) {
  Ops ops{net};
  int x = ops.conv_bn_act(net.input_node(), 32, 3, 3, 2, 2, Padding::Valid, Act::Relu);
  x = ops.conv_bn_act(x, 64, 3, 3, 1, 1, Padding::Valid, Act::Relu);

  x = reduction_block(ops, x, 128, 128, /*relu_first=*/false);
  x = reduction_block(ops, x, 256, 256, true);
  x = reduction_block(ops, x, 728, 728, true);

  for (int i = 0; i < 8; ++i) {
    int y = x;
    for (int j = 0; j < 3; ++j) {
      y = ops.relu(y);
      y = sep_bn(ops, y, 728);
    }
    x = ops.add({x, y});
  }

  x = reduction_block(ops, x, 728, 1024, true);
  x = sep_bn(ops, x, 1536);
  x = ops.relu(x);
  x = sep_bn(ops, x, 2048);
  return ops.relu(x);
}

}  // namespace crackdet::zoo
