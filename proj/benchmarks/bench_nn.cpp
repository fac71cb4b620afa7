#include <benchmark/benchmark.h>

#include "crackdet/cam.hpp"
#include "crackdet/classifier.hpp"
#include "crackdet/model_zoo.hpp"
#include "crackdet/nn/layers.hpp"
#include "crackdet/preprocess.hpp"
#include "crackdet/rng.hpp"
#include "crackdet/scan.hpp"

using namespace crackdet;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (float& v : t.flat()) v = rng.uniform_f(-1.0f, 1.0f);
  return t;
}

void BM_Conv2DForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  nn::Conv2D conv("c", {c, 3, 3, 1, 1, nn::Padding::Same, false});
  conv.infer({{56, 56, c}});
  Rng rng(1);
  conv.init_params(rng);
  Tensor x = random_tensor({1, 56, 56, c}, 2);
  std::vector<const Tensor*> ins{&x};
  Tensor out;
  for (auto _ : state) {
    conv.forward(ins, out, false);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Conv2DForward)->Arg(64)->Arg(128)->Arg(256);

void BM_DepthwiseForward(benchmark::State& state) {
  nn::DepthwiseConv2D conv("d", {3, 3, 1, 1, nn::Padding::Same, false});
  conv.infer({{56, 56, 128}});
  Rng rng(1);
  conv.init_params(rng);
  Tensor x = random_tensor({1, 56, 56, 128}, 2);
  std::vector<const Tensor*> ins{&x};
  Tensor out;
  for (auto _ : state) {
    conv.forward(ins, out, false);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DepthwiseForward);

void BM_BackboneForward(benchmark::State& state, const char* name) {
  ClassifierModel model = ClassifierModel::build(find_backbone(name), Regime::Scratch);
  Tensor batch = random_tensor({1, 224, 224, 3}, 3);
  for (float& v : batch.flat()) v = (v + 1.0f) * 127.5f;
  const Tensor pre = preprocess(batch, find_backbone(name).preprocess);
  for (auto _ : state) {
    auto preds = model.predict(pre, find_backbone(name).preprocess);
    benchmark::DoNotOptimize(preds[0].probs[0]);
  }
}
BENCHMARK_CAPTURE(BM_BackboneForward, mobilenet_v3_small, "MobileNetV3Small")
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BackboneForward, vgg16, "VGG16")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BackboneForward, resnet50_v2, "ResNet50V2")
    ->Unit(benchmark::kMillisecond);

void BM_BilinearUpsample(benchmark::State& state) {
  Tensor raw = random_tensor({7, 7}, 4);
  for (auto _ : state) {
    Tensor up = upsample_bilinear(raw, 224, 224);
    benchmark::DoNotOptimize(up.data());
  }
}
BENCHMARK(BM_BilinearUpsample);

void BM_ScanGridAccumulate(benchmark::State& state) {
  ScanGrid grid(1024, 1024, 224, 32);
  Tensor field = random_tensor({224, 224}, 5);
  const auto windows = enumerate_windows(1024, 1024, 224, 32);
  size_t i = 0;
  for (auto _ : state) {
    const auto& [x, y] = windows[i++ % windows.size()];
    grid.accumulate(x, y, field);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * 224 * 224 *
                          sizeof(float));
}
BENCHMARK(BM_ScanGridAccumulate);

}  // namespace

BENCHMARK_MAIN();
