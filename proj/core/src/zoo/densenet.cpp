#include "zoo/build.hpp"

namespace crackdet::zoo {

namespace {
constexpr float kBnEps = 1.001e-5f;
constexpr int kGrowthRate = 32;
}  // namespace

int build_densenet(nn::Network& net, const std::vector<int>& blocks) {
  Ops ops{net};
  int x = ops.conv(net.input_node(), 64, 7, 2, Padding::Same, /*bias=*/false);
  x = ops.bn(x, kBnEps);
  x = ops.relu(x);
  x = ops.maxpool(x, 3, 2, Padding::Same);

  for (size_t b = 0; b < blocks.size(); ++b) {
    for (int i = 0; i < blocks[b]; ++i) {
      // BN-ReLU-1x1(4k) -> BN-ReLU-3x3(k), concatenated onto the running stack.
      int y = ops.bn(x, kBnEps);
      y = ops.relu(y);
      y = ops.conv(y, 4 * kGrowthRate, 1, 1, Padding::Valid, /*bias=*/false);
      y = ops.bn(y, kBnEps);
      y = ops.relu(y);
      y = ops.conv(y, kGrowthRate, 3, 1, Padding::Same, /*bias=*/false);
      x = ops.concat({x, y});
    }
    if (b + 1 < blocks.size()) {
      int t = ops.bn(x, kBnEps);
      t = ops.relu(t);
      t = ops.conv(t, ops.channels(x) / 2, 1, 1, Padding::Valid, /*bias=*/false);
      x = ops.avgpool(t, 2, 2, Padding::Valid);
    }
  }
  x = ops.bn(x, kBnEps);
  return ops.relu(x);
}

}  // namespace crackdet::zoo
