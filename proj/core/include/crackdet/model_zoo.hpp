#pragma once

#include <string>
#include <vector>

#include "crackdet/nn/network.hpp"
#include "crackdet/nn/optimizer.hpp"
#include "crackdet/preprocess.hpp"

namespace crackdet {

enum class Regime { Transfer, Scratch };

const char* to_string(Regime r);
std::optional<Regime> parse_regime(const std::string& s);

// One registry row per supported architecture. params_millions and depth are
// the published reference figures for the canonical networks (original
// classification tops included); the as-built classifier replaces those tops
// with GAP + a 2-unit dense head.
struct BackboneSpec {
  std::string name;
  float params_millions = 0.0f;
  int depth = 0;
  PreprocessMode preprocess = PreprocessMode::SymmetricUnit;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  float default_lr = 1e-4f;
};

// All 11 backbones, in the published table order.
const std::vector<BackboneSpec>& backbone_registry();
// RegistryError if the name is unknown.
const BackboneSpec& find_backbone(const std::string& name);
bool is_registered_backbone(const std::string& name);

// Appends the named feature extractor to `net` on top of `input_node` and
// returns the node producing the pre-pool feature maps.
int build_backbone_graph(nn::Network& net, const std::string& name);

}  // namespace crackdet
