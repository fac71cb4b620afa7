#pragma once

#include <array>
#include <filesystem>
#include <memory>

#include "crackdet/dataset.hpp"
#include "crackdet/model_zoo.hpp"
#include "crackdet/nn/network.hpp"
#include "crackdet/preprocess.hpp"

namespace crackdet {

// Backbone feature extractor + GAP + 2-unit softmax head. Class index order
// is [NoCrack=0, Crack=1] everywhere; `class_order` in a loaded artifact may
// permute the network outputs back into that canonical order.
class ClassifierModel {
 public:
  struct BuildOptions {
    bool pretrained = false;  // load ImageNet backbone weights from weights_dir
    uint64_t seed = 0;
    std::filesystem::path weights_dir;  // falls back to $CRACKDET_WEIGHTS_DIR
  };

  static ClassifierModel build(const BackboneSpec& spec, Regime regime,
                               const BuildOptions& opts);
  static ClassifierModel build(const BackboneSpec& spec, Regime regime) {
    return build(spec, regime, BuildOptions{});
  }

  struct Prediction {
    std::array<float, 2> probs{};  // canonical [NoCrack, Crack]
    Label label = Label::NoCrack;  // argmax; exact tie resolves to Crack
    Tensor feature_maps;           // [H',W',C] pre-pool activations
  };

  // `claimed` must equal the recorded preprocessing mode.
  std::vector<Prediction> predict(const Tensor& preprocessed,
                                  PreprocessMode claimed) ;
  Prediction predict_one(const Tensor& preprocessed, PreprocessMode claimed);

  // Dense parameters with columns permuted into canonical class order.
  Tensor head_weights() const;  // [C,2]
  std::array<float, 2> head_bias() const;

  nn::Network& network() { return *net_; }
  const nn::Network& network() const { return *net_; }
  int feature_node() const { return feature_node_; }
  int logits_node() const { return logits_node_; }

  const BackboneSpec& spec() const { return spec_; }
  Regime regime() const { return regime_; }
  uint64_t seed() const { return seed_; }
  bool pretrained() const { return pretrained_; }
  int feature_width() const;
  nn::Shape3 feature_shape() const { return net_->node_shape(feature_node_); }

  size_t parameter_count() const;
  size_t trainable_parameter_count() const;
  // Order-sensitive checksum over every backbone tensor (incl. BN statistics).
  uint64_t backbone_checksum() const;

  const std::array<Label, 2>& class_order() const { return class_order_; }
  void set_class_order(const std::array<Label, 2>& order);
  const PreprocessConstants& preprocess_constants() const { return constants_; }

  void set_regime(Regime regime);  // re-applies freeze flags

 private:
  ClassifierModel() = default;
  void apply_freeze();

  BackboneSpec spec_;
  Regime regime_ = Regime::Scratch;
  uint64_t seed_ = 0;
  bool pretrained_ = false;
  std::unique_ptr<nn::Network> net_;
  int feature_node_ = -1;
  int gap_node_ = -1;
  int logits_node_ = -1;
  int probs_node_ = -1;
  size_t backbone_param_end_ = 0;  // params [0, end) belong to the backbone
  std::array<Label, 2> class_order_{Label::NoCrack, Label::Crack};
  PreprocessConstants constants_;
};

}  // namespace crackdet
