#include "crackdet/model_zoo.hpp"

#include <algorithm>

#include "crackdet/errors.hpp"
#include "zoo/build.hpp"

namespace crackdet {

const char* to_string(Regime r) {
  return r == Regime::Transfer ? "transfer" : "scratch";
}

std::optional<Regime> parse_regime(const std::string& s) {
  if (s == "transfer") return Regime::Transfer;
  if (s == "scratch") return Regime::Scratch;
  return std::nullopt;
}

const std::vector<BackboneSpec>& backbone_registry() {
  using nn::OptimizerKind;
  // Reference parameter counts (millions) and topological depth follow the
  // published comparison table; SGD is reserved for the two VGG variants.
  static const std::vector<BackboneSpec> kRegistry = {
      {"VGG16", 138.4f, 16, PreprocessMode::BgrCentered, OptimizerKind::Sgd, 1e-4f},
      {"VGG19", 143.7f, 19, PreprocessMode::BgrCentered, OptimizerKind::Sgd, 1e-4f},
      {"InceptionResNetV2", 55.9f, 449, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 1e-4f},
      {"MobileNetV3Small", 2.9f, 66, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 1e-4f},
      {"MobileNetV3Large", 5.4f, 217, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 1e-4f},
      {"DenseNet121", 8.1f, 242, PreprocessMode::UnitImagenetNorm, OptimizerKind::Adam, 1e-4f},
      {"DenseNet169", 14.3f, 338, PreprocessMode::UnitImagenetNorm, OptimizerKind::Adam, 1e-4f},
      {"DenseNet201", 20.2f, 402, PreprocessMode::UnitImagenetNorm, OptimizerKind::Adam, 1e-4f},
      {"ResNet50V2", 25.6f, 103, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 8.5e-5f},
      {"ResNet101V2", 44.7f, 205, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 8.5e-5f},
      {"Xception", 22.9f, 81, PreprocessMode::SymmetricUnit, OptimizerKind::Adam, 1e-3f},
  };
  return kRegistry;
}

const BackboneSpec& find_backbone(const std::string& name) {
  for (const auto& spec : backbone_registry())
    if (spec.name == name) return spec;
  throw RegistryError("unknown backbone '" + name + "'");
}

bool is_registered_backbone(const std::string& name) {
  const auto& reg = backbone_registry();
  return std::any_of(reg.begin(), reg.end(),
                     [&](const auto& s) { return s.name == name; });
}

int build_backbone_graph(nn::Network& net, const std::string& name) {
  if (name == "VGG16") return zoo::build_vgg16(net);
  if (name == "VGG19") return zoo::build_vgg19(net);
  if (name == "InceptionResNetV2") return zoo::build_inception_resnet_v2(net);
  if (name == "MobileNetV3Small") return zoo::build_mobilenet_v3(net, false);
  if (name == "MobileNetV3Large") return zoo::build_mobilenet_v3(net, true);
  if (name == "DenseNet121") return zoo::build_densenet(net, {6, 12, 24, 16});
  if (name == "DenseNet169") return zoo::build_densenet(net, {6, 12, 32, 32});
  if (name == "DenseNet201") return zoo::build_densenet(net, {6, 12, 48, 32});
  if (name == "ResNet50V2") return zoo::build_resnet50_v2(net);
  if (name == "ResNet101V2") return zoo::build_resnet101_v2(net);
  if (name == "Xception") return zoo::build_xception(net);
  throw RegistryError("unknown backbone '" + name + "'");
}

}  // namespace crackdet
