#include "zoo/build.hpp"

namespace crackdet::zoo {

namespace {

int build_vgg(nn::Network& net, const std::vector<int>& convs_per_block) {
  Ops ops{net};
  const int filters[5] = {64, 128, 256, 512, 512};
  int x = net.input_node();
  for (size_t b = 0; b < convs_per_block.size(); ++b) {
    for (int i = 0; i < convs_per_block[b]; ++i) {
      x = ops.conv(x, filters[b], 3, 1, Padding::Same, /*bias=*/true);
      x = ops.relu(x);
    }
    x = ops.maxpool(x, 2, 2, Padding::Valid);
  }
  return x;
}

}  // namespace

int build_vgg16(nn::Network& net) { return build_vgg(net, {2, 2, 3, 3, 3}); }
int build_vgg19(nn::Network& net) { return build_vgg(net, {2, 2, 4, 4, 4}); }

}  // namespace crackdet::zoo
