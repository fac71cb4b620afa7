#include <doctest.h>

#include <cmath>
#include <map>

#include "crackdet/classifier.hpp"
#include "crackdet/errors.hpp"
#include "crackdet/model_zoo.hpp"
#include "crackdet/nn/loss.hpp"
#include "crackdet/preprocess.hpp"
#include "crackdet/rng.hpp"

using namespace crackdet;

namespace {

Tensor random_patch_batch(int n, uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, 224, 224, 3});
  for (float& v : t.flat()) v = rng.uniform_f(0.0f, 255.0f);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("model_zoo");

TEST_CASE("registry carries the published table") {
  const auto& reg = backbone_registry();
  REQUIRE(reg.size() == 11);

  const std::map<std::string, std::pair<float, int>> table = {
      {"VGG16", {138.4f, 16}},          {"VGG19", {143.7f, 19}},
      {"InceptionResNetV2", {55.9f, 449}}, {"MobileNetV3Small", {2.9f, 66}},
      {"MobileNetV3Large", {5.4f, 217}},   {"DenseNet121", {8.1f, 242}},
      {"DenseNet169", {14.3f, 338}},       {"DenseNet201", {20.2f, 402}},
      {"ResNet50V2", {25.6f, 103}},        {"ResNet101V2", {44.7f, 205}},
      {"Xception", {22.9f, 81}},
  };
  for (const auto& spec : reg) {
    const auto& [params, depth] = table.at(spec.name);
    CHECK(spec.params_millions == doctest::Approx(params));
    CHECK(spec.depth == depth);
    // SGD iff VGG16/VGG19.
    const bool is_vgg = spec.name == "VGG16" || spec.name == "VGG19";
    CHECK((spec.optimizer == nn::OptimizerKind::Sgd) == is_vgg);
  }
  CHECK(find_backbone("ResNet50V2").default_lr == doctest::Approx(8.5e-5f));
  CHECK(find_backbone("Xception").default_lr == doctest::Approx(1e-3f));
  CHECK_THROWS_AS(find_backbone("AlexNet"), RegistryError);
}

TEST_CASE("preprocess mode assignment follows the paper's grouping") {
  CHECK(find_backbone("VGG16").preprocess == PreprocessMode::BgrCentered);
  CHECK(find_backbone("VGG19").preprocess == PreprocessMode::BgrCentered);
  for (const char* n : {"ResNet50V2", "ResNet101V2", "MobileNetV3Small",
                        "MobileNetV3Large", "Xception", "InceptionResNetV2"})
    CHECK(find_backbone(n).preprocess == PreprocessMode::SymmetricUnit);
  for (const char* n : {"DenseNet121", "DenseNet169", "DenseNet201"})
    CHECK(find_backbone(n).preprocess == PreprocessMode::UnitImagenetNorm);
}

TEST_CASE("feature map shapes at 224 input") {
  const std::map<std::string, std::array<int, 3>> expected = {
      {"VGG16", {7, 7, 512}},          {"VGG19", {7, 7, 512}},
      {"InceptionResNetV2", {5, 5, 1536}}, {"MobileNetV3Small", {7, 7, 576}},
      {"MobileNetV3Large", {7, 7, 960}},   {"DenseNet121", {7, 7, 1024}},
      {"DenseNet169", {7, 7, 1664}},       {"DenseNet201", {7, 7, 1920}},
      {"ResNet50V2", {7, 7, 2048}},        {"ResNet101V2", {7, 7, 2048}},
      {"Xception", {7, 7, 2048}},
  };
  for (const auto& [name, shape] : expected) {
    nn::Network net({224, 224, 3});
    const int feature = build_backbone_graph(net, name);
    const auto s = net.node_shape(feature);
    CAPTURE(name);
    CHECK(s.h == shape[0]);
    CHECK(s.w == shape[1]);
    CHECK(s.c == shape[2]);
  }
}

TEST_CASE("transfer regime trains exactly the analytic head size") {
  for (const auto& spec : backbone_registry()) {
    ClassifierModel::BuildOptions opts;
    opts.seed = 3;
    ClassifierModel m = ClassifierModel::build(spec, Regime::Transfer, opts);
    CAPTURE(spec.name);
    CHECK(m.trainable_parameter_count() ==
          static_cast<size_t>(m.feature_width()) * 2 + 2);
    // Scratch regime unlocks everything.
    m.set_regime(Regime::Scratch);
    CHECK(m.trainable_parameter_count() == m.parameter_count());
  }
}

TEST_CASE("as-built VGG16 parameter count matches the closed form") {
  // Backbone convs 14,714,688 plus the 2-unit head (512*2 + 2). The published
  // 138.4M figure counts the original dense top, which GAP replaces.
  ClassifierModel m = ClassifierModel::build(find_backbone("VGG16"), Regime::Scratch);
  CHECK(m.parameter_count() == 14714688u + 512u * 2 + 2);
}

TEST_CASE("forward is a softmax simplex and matches the exposed head tensors") {
  ClassifierModel m = ClassifierModel::build(find_backbone("MobileNetV3Small"),
                                             Regime::Scratch);
  const Tensor batch = random_patch_batch(2, 99);
  const Tensor pre = preprocess(batch, PreprocessMode::SymmetricUnit);
  auto preds = m.predict(pre, PreprocessMode::SymmetricUnit);
  REQUIRE(preds.size() == 2);
  for (const auto& p : preds) {
    CHECK(p.probs[0] >= 0.0f);
    CHECK(p.probs[1] >= 0.0f);
    CHECK(p.probs[0] + p.probs[1] == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(p.feature_maps.shape() == std::vector<int>{7, 7, 576});

    // Recompute the head from the exposed tensors: softmax(GAP(F) W + b).
    const Tensor w = m.head_weights();
    const auto b = m.head_bias();
    const int C = p.feature_maps.dim(2);
    std::vector<double> pooled(static_cast<size_t>(C), 0.0);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x)
        for (int c = 0; c < C; ++c)
          pooled[static_cast<size_t>(c)] +=
              p.feature_maps[static_cast<size_t>((y * 7 + x) * C + c)];
    double logits[2] = {b[0], b[1]};
    for (int c = 0; c < C; ++c)
      for (int k = 0; k < 2; ++k)
        logits[k] += pooled[static_cast<size_t>(c)] / 49.0 * w.at(c, k);
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    CHECK(p.probs[0] == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-5));
    CHECK(p.probs[1] == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-5));
  }
}

TEST_CASE("preprocessing-mode mismatch is a hard error") {
  ClassifierModel m = ClassifierModel::build(find_backbone("MobileNetV3Small"),
                                             Regime::Scratch);
  const Tensor pre = preprocess(random_patch_batch(1, 5), PreprocessMode::BgrCentered);
  CHECK_THROWS_AS(m.predict(pre, PreprocessMode::BgrCentered), ConfigError);
}

TEST_CASE("missing pretrained weights raise a registry error") {
  ClassifierModel::BuildOptions opts;
  opts.pretrained = true;
  opts.weights_dir = "/nonexistent/weights";
  CHECK_THROWS_AS(ClassifierModel::build(find_backbone("ResNet50V2"),
                                         Regime::Transfer, opts),
                  RegistryError);
}

TEST_CASE("same seed rebuilds identical parameters") {
  ClassifierModel::BuildOptions opts;
  opts.seed = 1234;
  ClassifierModel a = ClassifierModel::build(find_backbone("MobileNetV3Small"),
                                             Regime::Scratch, opts);
  ClassifierModel b = ClassifierModel::build(find_backbone("MobileNetV3Small"),
                                             Regime::Scratch, opts);
  CHECK(a.backbone_checksum() == b.backbone_checksum());
}

TEST_SUITE_END();
